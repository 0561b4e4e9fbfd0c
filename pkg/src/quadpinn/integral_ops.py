"""Fredholm and Volterra operators as precomputed matrix/tensor contractions.

Every ``assemble_*`` function evaluates the kernel once on the quadrature
layout and returns an immutable assembly.  The matching ``apply_*`` function
takes the unknown sampled on the assembly's evaluation points (``a.points``)
and returns the integral at the outer points.  ``apply_*`` accepts numpy
arrays or :class:`~quadpinn.autodiff.Tensor` values, so the same code serves
plain evaluation and training.

Layout conventions:

* 1-D Fredholm: ``I_i = s * sum_j K[i,j] u(r_j) w_j`` with ``s = (b-a)/2``.
* 1-D Volterra: inner nodes ``R[i,j] = (h(x_i)-g(x_i))/2 * r_j + (h(x_i)+g(x_i))/2``
  and ``I_i = s_i * sum_j K[i,j] u(R[i,j]) w_j`` with ``s_i = (h(x_i)-g(x_i))/2``.
* Multi-dimensional operators contract the innermost axis first (y, then x
  in 2-D; z, then y, then x in 3-D).  Evaluation points are ordered
  row-major in axis order (x, y, z), so ``u.reshape(a.points.shape[:-1])``
  maps a flat network output onto the tensor layout.

Kernels are vectorized callables.  A kernel may be supplied *including* the
weight function of a non-Legendre rule (for example ``exp(-(x+t))`` with a
Gauss-Laguerre rule); pass ``kernel_includes_weight=True`` and the weight is
divided out at assembly.  Dense storage means 2-D Volterra operators hold
``Nx^2 * Ny^2`` reals; keep ``N <= 30`` per axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import autodiff as ad
from .quadrature import MappedRule, QuadratureRule

__all__ = [
    "OperatorError",
    "FredholmAssembly",
    "VolterraAssembly",
    "LineAssembly",
    "TensorAssembly",
    "assemble_fredholm",
    "apply_fredholm",
    "assemble_volterra",
    "apply_volterra",
    "assemble_line",
    "apply_line",
    "assemble_fredholm_2d",
    "apply_fredholm_2d",
    "assemble_volterra_2d",
    "apply_volterra_2d",
    "assemble_fredholm_3d",
    "apply_fredholm_3d",
]

Rule = Union[QuadratureRule, MappedRule]
Bound = Union[float, Callable]


class OperatorError(ValueError):
    """Invalid operator layout, bounds, or kernel values."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def _kernel_values(kernel: Callable, args: tuple, shape: tuple, what: str) -> np.ndarray:
    with np.errstate(all="ignore"):
        values = np.asarray(kernel(*args), dtype=np.float64)
    try:
        values = np.broadcast_to(values, shape).copy()
    except ValueError as exc:
        raise OperatorError(f"{what} kernel returned shape {values.shape}, expected {shape}") from exc
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise OperatorError(f"{what} kernel is not finite at layout index {tuple(int(i) for i in bad)}")
    return values


def _bound_values(bound: Bound, x: np.ndarray) -> np.ndarray:
    if callable(bound):
        with np.errstate(all="ignore"):
            values = np.asarray(bound(x), dtype=np.float64)
        return np.broadcast_to(values, x.shape[:1] if x.ndim > 1 else x.shape).astype(np.float64)
    return np.full(x.shape[:1] if x.ndim > 1 else x.shape, float(bound))


def _reference(rule: Rule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference nodes, weights and the family weight at those nodes."""
    base = rule.base if isinstance(rule, MappedRule) else rule
    return base.nodes, base.weights, base.family.weight_function(base.nodes)


def _vector(u, n: int, what: str):
    shape = u.shape if isinstance(u, ad.Tensor) else np.shape(u)
    if tuple(shape) not in ((n,), (n, 1)):
        raise OperatorError(f"{what}: expected {n} values, got shape {tuple(shape)}")
    if len(shape) == 2:
        return u.reshape(n) if isinstance(u, ad.Tensor) else np.asarray(u, dtype=np.float64).reshape(n)
    return u if isinstance(u, ad.Tensor) else np.asarray(u, dtype=np.float64)


def _block(u, shape: tuple, what: str):
    got = tuple(u.shape if isinstance(u, ad.Tensor) else np.shape(u))
    size = int(np.prod(shape))
    if got != shape and got not in ((size,), (size, 1)):
        raise OperatorError(f"{what}: expected values of shape {shape}, got {got}")
    if isinstance(u, ad.Tensor):
        return u if got == shape else u.reshape(shape)
    return np.asarray(u, dtype=np.float64).reshape(shape)


# ---------------------------------------------------------------------------
# 1-D Fredholm


@dataclass(frozen=True)
class FredholmAssembly:
    """Kernel matrix ``K[i,j] = kernel(x_i, r_j)``, weights and scale."""

    K: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    scale: float
    x: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)

    @property
    def points(self) -> np.ndarray:
        return self.r


def assemble_fredholm(kernel: Callable, x, rule: Rule,
                      kernel_includes_weight: bool = False) -> FredholmAssembly:
    """Precompute ``K[i,j] = kernel(x_i, r_j)`` for the nodes ``r`` of ``rule``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    r = np.asarray(rule.nodes, dtype=np.float64)
    K = _kernel_values(kernel, (x[:, None], r[None, :]), (x.size, r.size), "Fredholm")
    if kernel_includes_weight:
        _, _, omega = _reference(rule)
        K = K / omega[None, :]
    return FredholmAssembly(_frozen(K), _frozen(rule.weights), float(rule.scale), _frozen(x), _frozen(r))


def apply_fredholm(a: FredholmAssembly, u_at_r):
    """``I_i = scale * sum_j K[i,j] u_j w_j`` for samples ``u_j = u(r_j)``."""
    u = _vector(u_at_r, a.r.size, "apply_fredholm")
    return (a.K * a.w[None, :]) @ u * a.scale


# ---------------------------------------------------------------------------
# 1-D Volterra


@dataclass(frozen=True)
class VolterraAssembly:
    """Inner-node matrix ``R``, kernel matrix on ``R``, weights and per-row scales."""

    R: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    g: Bound = field(repr=False)
    h: Bound = field(repr=False)

    @property
    def points(self) -> np.ndarray:
        return self.R


def assemble_volterra(kernel: Callable, g: Bound, h: Bound, rule: Rule, x=None,
                      inner_rule: Optional[QuadratureRule] = None,
                      kernel_includes_weight: bool = False) -> VolterraAssembly:
    """Assemble ``int_{g(x)}^{h(x)} K(x,t) u(t) dt`` on the outer points ``x``.

    ``x`` defaults to the nodes of ``rule`` (the collocation points).  The
    inner reference nodes come from ``inner_rule`` when given (for example a
    Gauss-Jacobi rule matched to a weakly singular kernel), otherwise from
    the reference rule underlying ``rule``.
    """
    x = np.asarray(rule.nodes if x is None else x, dtype=np.float64).reshape(-1)
    inner = inner_rule if inner_rule is not None else rule
    ref, w, omega = _reference(inner)
    if not inner_family_finite(inner):
        raise OperatorError("Volterra inner rules must be finite-domain (Legendre, Chebyshev, Jacobi)")
    lo = _bound_values(g, x)
    hi = _bound_values(h, x)
    if np.any(hi < lo):
        i = int(np.argmax(lo - hi))
        raise OperatorError(f"Volterra upper bound below lower bound at x[{i}] = {x[i]}")
    scale = 0.5 * (hi - lo)
    R = scale[:, None] * ref[None, :] + 0.5 * (hi + lo)[:, None]
    K = _kernel_values(kernel, (x[:, None], R), R.shape, "Volterra")
    if kernel_includes_weight:
        K = K / omega[None, :]
    return VolterraAssembly(_frozen(R), _frozen(K), _frozen(w), _frozen(scale), _frozen(x), g, h)


def inner_family_finite(rule: Rule) -> bool:
    base = rule.base if isinstance(rule, MappedRule) else rule
    return base.family.finite


def apply_volterra(a: VolterraAssembly, u_on_R):
    """``I_i = scale_i * sum_j K[i,j] u(R[i,j]) w_j``."""
    U = _block(u_on_R, a.R.shape, "apply_volterra")
    return (a.K * U) @ a.w * a.scale


# ---------------------------------------------------------------------------
# Integral along one axis of multi-dimensional points (partial IDEs)


@dataclass(frozen=True)
class LineAssembly:
    """A 1-D integral along coordinate ``axis`` evaluated at multi-dimensional points."""

    axis: int
    points_outer: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)

    @property
    def points(self) -> np.ndarray:
        """Evaluation points, shape ``(P, n, d)``: outer point ``p`` with coordinate ``axis`` set to ``S[p, k]``."""
        P, n = self.S.shape
        pts = np.repeat(self.points_outer[:, None, :], n, axis=1)
        pts[:, :, self.axis] = self.S
        return pts


def assemble_line(kernel: Callable, points, axis: int, g: Bound, h: Bound,
                  inner_rule: QuadratureRule) -> LineAssembly:
    """Assemble ``int_{g(p)}^{h(p)} K(p, s) u(p with coordinate axis = s) ds``.

    ``kernel`` is called as ``kernel(*coords, s)`` where ``coords`` are the
    outer coordinates as ``(P, 1)`` columns and ``s`` is ``(P, n)``.  Bounds
    are constants or callables of the ``(P, d)`` point array.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or not 0 <= axis < pts.shape[1]:
        raise OperatorError("points must be (P, d) and axis < d")
    ref, w, _ = _reference(inner_rule)
    lo = _bound_values(g, pts)
    hi = _bound_values(h, pts)
    if np.any(hi < lo):
        raise OperatorError("line integral upper bound below lower bound")
    scale = 0.5 * (hi - lo)
    S = scale[:, None] * ref[None, :] + 0.5 * (hi + lo)[:, None]
    coords = tuple(pts[:, k:k + 1] for k in range(pts.shape[1]))
    K = _kernel_values(kernel, coords + (S,), S.shape, "line")
    return LineAssembly(axis, _frozen(pts), _frozen(S), _frozen(K), _frozen(w), _frozen(scale))


def apply_line(a: LineAssembly, u_on_points):
    """``I_p = scale_p * sum_k K[p,k] u(points[p,k]) w_k``."""
    U = _block(u_on_points, a.S.shape, "apply_line")
    return (a.K * U) @ a.w * a.scale


# ---------------------------------------------------------------------------
# Multi-dimensional operators


@dataclass(frozen=True)
class TensorAssembly:
    """Rank-2d kernel tensor with per-axis weights, scales and inner nodes.

    ``scales[k]`` is a float for Fredholm axes and a vector over the outer
    nodes of that axis for Volterra axes.  ``inner[k]`` holds the inner nodes
    of axis ``k``: a vector (Fredholm) or the matrix ``R^{(k)}`` (Volterra).
    """

    kind: str
    K: np.ndarray = field(repr=False)
    weights: tuple = field(repr=False)
    scales: tuple = field(repr=False)
    outer: tuple = field(repr=False)
    inner: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.outer)

    @property
    def points(self) -> np.ndarray:
        """Coordinates at which ``u`` is needed, last axis = spatial dimension."""
        if self.kind.startswith("fredholm"):
            grids = np.meshgrid(*self.inner, indexing="ij")
            return np.stack(grids, axis=-1)
        Rx, Ry = self.inner
        nx, ny = Rx.shape[0], Ry.shape[0]
        px = np.broadcast_to(Rx[:, None, :, None], (nx, ny, nx, ny))
        py = np.broadcast_to(Ry[None, :, None, :], (nx, ny, nx, ny))
        return np.stack([px, py], axis=-1)


def _outer_nodes(rule: Rule, nodes) -> np.ndarray:
    return np.asarray(rule.nodes if nodes is None else nodes, dtype=np.float64).reshape(-1)


def assemble_fredholm_2d(kernel: Callable, rule_x: Rule, rule_y: Rule, x=None, y=None) -> TensorAssembly:
    """``K[i,j,k,l] = kernel(x_i, y_j, s_k, t_l)`` on the tensor grid of the two rules."""
    xo, yo = _outer_nodes(rule_x, x), _outer_nodes(rule_y, y)
    s, t = np.asarray(rule_x.nodes), np.asarray(rule_y.nodes)
    shape = (xo.size, yo.size, s.size, t.size)
    K = _kernel_values(kernel, (xo[:, None, None, None], yo[None, :, None, None],
                                s[None, None, :, None], t[None, None, None, :]), shape, "Fredholm 2-D")
    return TensorAssembly("fredholm2d", _frozen(K), (_frozen(rule_x.weights), _frozen(rule_y.weights)),
                          (float(rule_x.scale), float(rule_y.scale)), (_frozen(xo), _frozen(yo)),
                          (_frozen(s), _frozen(t)))


def apply_fredholm_2d(a: TensorAssembly, u_grid):
    """Contract ``l`` (weights ``w_y``) then ``k`` (weights ``w_x``)."""
    if a.kind != "fredholm2d":
        raise OperatorError(f"expected a fredholm2d assembly, got {a.kind}")
    U = _block(u_grid, a.K.shape[2:], "apply_fredholm_2d")
    wx, wy = a.weights
    sx, sy = a.scales
    U = U.reshape((1, 1) + a.K.shape[2:])
    inner = (a.K * U) @ wy * sy
    return inner @ wx * sx


def assemble_volterra_2d(kernel: Callable, g1: Bound, h1: Bound, g2: Bound, h2: Bound,
                         rule_x: Rule, rule_y: Rule, x=None, y=None) -> TensorAssembly:
    """Volterra operator over ``[g1(x), h1(x)] x [g2(y), h2(y)]``."""
    xo, yo = _outer_nodes(rule_x, x), _outer_nodes(rule_y, y)
    rx, wx, _ = _reference(rule_x)
    ry, wy, _ = _reference(rule_y)
    mats, scales = [], []
    for nodes, ref, lo_b, hi_b, label in ((xo, rx, g1, h1, "x"), (yo, ry, g2, h2, "y")):
        lo = _bound_values(lo_b, nodes)
        hi = _bound_values(hi_b, nodes)
        if np.any(hi < lo):
            raise OperatorError(f"Volterra 2-D upper bound below lower bound on axis {label}")
        sc = 0.5 * (hi - lo)
        mats.append(sc[:, None] * ref[None, :] + 0.5 * (hi + lo)[:, None])
        scales.append(sc)
    Rx, Ry = mats
    nx, ny = xo.size, yo.size
    shape = (nx, ny, rx.size, ry.size)
    K = _kernel_values(kernel, (xo[:, None, None, None], yo[None, :, None, None],
                                Rx[:, None, :, None], Ry[None, :, None, :]), shape, "Volterra 2-D")
    return TensorAssembly("volterra2d", _frozen(K), (_frozen(wx), _frozen(wy)),
                          (_frozen(scales[0]), _frozen(scales[1])), (_frozen(xo), _frozen(yo)),
                          (_frozen(Rx), _frozen(Ry)))


def apply_volterra_2d(a: TensorAssembly, u_on_R):
    """``I[i,j] = s_x[i] s_y[j] sum_{k,l} K[i,j,k,l] u(Rx[i,k], Ry[j,l]) w_x[k] w_y[l]``."""
    if a.kind != "volterra2d":
        raise OperatorError(f"expected a volterra2d assembly, got {a.kind}")
    U = _block(u_on_R, a.K.shape, "apply_volterra_2d")
    wx, wy = a.weights
    sx, sy = a.scales
    inner = (a.K * U) @ wy * sy.reshape(1, -1, 1)
    return inner @ wx * sx.reshape(-1, 1)


def assemble_fredholm_3d(kernel: Callable, rule_x: Rule, rule_y: Rule, rule_z: Rule,
                         x=None, y=None, z=None) -> TensorAssembly:
    """``K[i,j,k,p,q,r] = kernel(x_i, y_j, z_k, r_p, s_q, t_r)`` on the three rules' grid."""
    outs = [_outer_nodes(rule_x, x), _outer_nodes(rule_y, y), _outer_nodes(rule_z, z)]
    ins = [np.asarray(r.nodes) for r in (rule_x, rule_y, rule_z)]
    shape = tuple(o.size for o in outs) + tuple(i.size for i in ins)
    args = []
    for k, arr in enumerate(outs + ins):
        s = [1] * 6
        s[k] = arr.size
        args.append(arr.reshape(s))
    K = _kernel_values(kernel, tuple(args), shape, "Fredholm 3-D")
    rules = (rule_x, rule_y, rule_z)
    return TensorAssembly("fredholm3d", _frozen(K), tuple(_frozen(r.weights) for r in rules),
                          tuple(float(r.scale) for r in rules), tuple(_frozen(o) for o in outs),
                          tuple(_frozen(i) for i in ins))


def apply_fredholm_3d(a: TensorAssembly, u_grid):
    """Contract the z axis, then y, then x."""
    if a.kind != "fredholm3d":
        raise OperatorError(f"expected a fredholm3d assembly, got {a.kind}")
    U = _block(u_grid, a.K.shape[3:], "apply_fredholm_3d")
    wx, wy, wz = a.weights
    sx, sy, sz = a.scales
    U = U.reshape((1, 1, 1) + a.K.shape[3:])
    stage = (a.K * U) @ wz * sz
    stage = stage @ wy * sy
    return stage @ wx * sx
