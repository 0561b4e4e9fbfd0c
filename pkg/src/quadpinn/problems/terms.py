"""Symbolic residual terms.

A residual is written as an expression over unknown functions, e.g. for
``u(x) = S(x) + int_0^1 t u(t) dt``::

    u = U("u")
    residual = u - Fredholm(lambda x, t: t, u) - Known(S)

Expressions are compiled against a point set (collocation nodes, inner
quadrature nodes of an operator, condition points) by
:class:`quadpinn.problems.build.Builder`.  Compilation precomputes every
kernel matrix and every known function value, and returns a closure that
evaluates the term from an :class:`~quadpinn.problems.build.Evaluator`.
Integral terms compile their integrand against the operator's own inner
nodes, so nonlinearities ``zeta(u)`` and ``zeta(u')`` apply pointwise there.

Kernels are numpy callables: ``kernel(x, t)`` in 1-D,
``kernel(x, y, s, t)`` in 2-D, ``kernel(x, y, z, r, s, t)`` in 3-D and
``kernel(*coords, s)`` for an integral along one axis.  Known functions
receive one array per coordinate.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Union

import numpy as np

from .. import autodiff as ad
from .. import fractional
from .. import integral_ops as ops
from ..quadrature import make_rule, parse_family

__all__ = [
    "Expr",
    "Const",
    "Known",
    "U",
    "D",
    "Caputo",
    "Delay",
    "Param",
    "Apply",
    "Fredholm",
    "Volterra",
    "Line",
    "Fredholm2D",
    "Volterra2D",
    "Fredholm3D",
    "ProblemError",
]


class ProblemError(ValueError):
    """A problem definition that cannot be compiled."""


def _full(value, size: int):
    """Broadcast a scalar or constant to a length-``size`` vector."""
    if isinstance(value, ad.Tensor):
        if value.shape == (size,):
            return value
        return ad.broadcast_to(value.reshape(-1) if value.ndim > 1 else value, (size,))
    return np.broadcast_to(np.asarray(value, dtype=np.float64), (size,))


def _wrap(other) -> "Expr":
    if isinstance(other, Expr):
        return other
    if isinstance(other, (int, float, np.floating, np.integer)):
        return Const(float(other))
    raise TypeError(f"cannot combine an expression with {type(other).__name__}; wrap functions in Known")


class Expr:
    """Base class; supports ``+ - * **`` and unary minus."""

    def compile(self, b, ps) -> Callable:
        raise NotImplementedError

    def __add__(self, other):
        return _Binary("+", self, _wrap(other))

    def __radd__(self, other):
        return _Binary("+", _wrap(other), self)

    def __sub__(self, other):
        return _Binary("-", self, _wrap(other))

    def __rsub__(self, other):
        return _Binary("-", _wrap(other), self)

    def __mul__(self, other):
        return _Binary("*", self, _wrap(other))

    def __rmul__(self, other):
        return _Binary("*", _wrap(other), self)

    def __neg__(self):
        return _Binary("*", Const(-1.0), self)

    def __pow__(self, p):
        return Apply(lambda v, p=float(p): v ** p, self, name=f"pow{p:g}")


class _Binary(Expr):
    def __init__(self, op: str, left: Expr, right: Expr):
        self.op, self.left, self.right = op, left, right

    def compile(self, b, ps):
        fl = self.left.compile(b, ps)
        fr = self.right.compile(b, ps)
        if self.op == "+":
            return lambda ev: fl(ev) + fr(ev)
        if self.op == "-":
            return lambda ev: fl(ev) - fr(ev)
        return lambda ev: fl(ev) * fr(ev)


class Const(Expr):
    def __init__(self, value: float):
        self.value = float(value)

    def compile(self, b, ps):
        value = self.value
        return lambda ev: value


class Known(Expr):
    """A known function of the coordinates, evaluated once at compile time."""

    def __init__(self, fn: Callable, name: str = ""):
        self.fn, self.name = fn, name

    def compile(self, b, ps):
        coords = [ps.points[:, k] for k in range(ps.points.shape[1])]
        with np.errstate(all="ignore"):
            values = np.asarray(self.fn(*coords), dtype=np.float64)
        values = np.broadcast_to(values, (ps.size,)).copy()
        if not np.all(np.isfinite(values)):
            raise ProblemError(f"known function {self.name or self.fn!r} is not finite on the compiled points")
        values.setflags(write=False)
        return lambda ev: values


class U(Expr):
    """Value of an unknown function."""

    def __init__(self, name: Union[str, int] = "u"):
        self.name = name

    def compile(self, b, ps):
        k = b.unknown_index(self.name)
        return lambda ev: ev.value(k, ps)


class D(Expr):
    """``order``-th partial derivative (1 or 2) of an unknown along ``axis``."""

    def __init__(self, name: Union[str, int] = "u", order: int = 1, axis: int = 0):
        if order not in (1, 2):
            raise ProblemError(f"derivative order must be 1 or 2, got {order}")
        self.name, self.order, self.axis = name, order, axis

    def compile(self, b, ps):
        k = b.unknown_index(self.name)
        if not 0 <= self.axis < ps.points.shape[1]:
            raise ProblemError(f"derivative axis {self.axis} out of range")
        b.require_grad(ps)
        order, axis = self.order, self.axis
        return lambda ev: ev.deriv(k, ps, order, axis)


class Caputo(Expr):
    """Caputo derivative of order ``p`` (0 < p < 2, not 1) via the L1 matrix.

    The L1 grid is the sorted collocation grid prefixed with the lower
    terminal of the domain.  Orders above 1 differentiate once by automatic
    differentiation and apply the remaining fractional order.
    """

    def __init__(self, name: Union[str, int] = "u", order: float = 0.5):
        v, alpha = fractional.split_order(order)
        if v > 1:
            raise ProblemError(f"Caputo orders above 2 are not supported, got {order}")
        self.name, self.order, self.v, self.alpha = name, float(order), v, alpha

    def compile(self, b, ps):
        if b.dim != 1 or ps is not b.colloc:
            raise ProblemError("Caputo terms are supported on 1-D collocation grids only")
        x = ps.points[:, 0]
        a = b.domain[0][0]
        if not np.all(np.diff(x) > 0) or x[0] <= a:
            raise ProblemError("the L1 grid needs sorted collocation nodes strictly inside the domain")
        m = fractional.caputo_matrix(np.concatenate([[a], x]), self.alpha)
        rows = np.array(m.M[1:])
        rows.setflags(write=False)
        grid = b.pointset(m.grid[:, None])
        k = b.unknown_index(self.name)
        if self.v == 0:
            return lambda ev: rows @ ev.value(k, grid)
        b.require_grad(grid)
        return lambda ev: rows @ ev.deriv(k, grid, self.v, 0)


class Delay(Expr):
    """``u(x - tau)`` with ``history(x - tau)`` used left of the domain.

    The network is only queried inside the domain: points left of the lower
    terminal are clipped to it and masked out.
    """

    def __init__(self, name: Union[str, int], tau: float, history: Callable):
        self.name, self.tau, self.history = name, float(tau), history

    def compile(self, b, ps):
        if b.dim != 1:
            raise ProblemError("delay terms are supported in 1-D only")
        k = b.unknown_index(self.name)
        start = b.domain[0][0]
        shifted = ps.points[:, 0] - self.tau
        mask = shifted >= start
        clipped = b.pointset(np.where(mask, shifted, start)[:, None])
        hist = np.where(mask, 0.0, np.broadcast_to(self.history(shifted), shifted.shape))
        weight = mask.astype(np.float64)
        return lambda ev: weight * ev.value(k, clipped) + hist


class Param(Expr):
    """A trainable scalar or per-collocation-node vector (inverse problems)."""

    def __init__(self, name: str):
        self.name = name

    def compile(self, b, ps):
        size = b.param_size(self.name)
        if size > 1 and ps is not b.colloc:
            raise ProblemError(f"vector parameter {self.name!r} can only be used at collocation points")
        name = self.name
        return lambda ev: ev.param(name)


class Apply(Expr):
    """Elementwise function of an expression (use ``autodiff`` functions such as ``ad.exp``)."""

    def __init__(self, fn: Callable, inner: Expr, name: str = ""):
        self.fn, self.inner, self.name = fn, _wrap(inner), name

    def compile(self, b, ps):
        f = self.inner.compile(b, ps)
        fn = self.fn
        return lambda ev: fn(f(ev))


# ---------------------------------------------------------------------------
# Integral operators


class _Integral(Expr):
    def __init__(self, kernel: Callable, integrand: Expr):
        self.kernel = kernel
        self.integrand = _wrap(integrand)


class Fredholm(_Integral):
    """``int_a^b K(x, t) integrand(t) dt``; defaults to the collocation rule on the domain.

    ``kernel_includes_weight`` states that the kernel already contains the
    weight function of a non-Legendre collocation family (Gauss-Laguerre
    on a semi-infinite domain), which is divided out at assembly.
    """

    def __init__(self, kernel, integrand, a: Optional[float] = None, b: Optional[float] = None,
                 kernel_includes_weight: bool = False):
        super().__init__(kernel, integrand)
        self.a, self.b = a, b
        self.kernel_includes_weight = kernel_includes_weight

    def compile(self, b, ps):
        rule = b.fredholm_rule(0, self.a, self.b)
        A = ops.assemble_fredholm(self.kernel, ps.points[:, 0], rule, self.kernel_includes_weight)
        inner = b.pointset(np.asarray(A.r)[:, None])
        f = self.integrand.compile(b, inner)
        n = A.r.size
        return lambda ev: ops.apply_fredholm(A, _full(f(ev), n))


class Volterra(_Integral):
    """``int_{g(x)}^{h(x)} K(x, t) integrand(t) dt`` (default bounds: domain start to ``x``).

    ``singular_exponent`` marks a kernel with the factor ``(x - t)^(-e)``.
    With the builder option ``singular_rule="jacobi"`` the inner rule
    becomes Gauss-Jacobi with weight ``(1 - r)^(-e)`` and that factor is
    divided out of the kernel; by default Gauss-Legendre is used.
    """

    def __init__(self, kernel, integrand, g=None, h=None, singular_exponent: float = 0.0):
        super().__init__(kernel, integrand)
        self.g, self.h = g, h
        self.singular_exponent = float(singular_exponent)

    def compile(self, b, ps):
        x = ps.points[:, 0]
        g = b.domain[0][0] if self.g is None else self.g
        h = (lambda v: v) if self.h is None else self.h
        n = b.n[0]
        if self.singular_exponent > 0.0 and b.singular_rule == "jacobi":
            e = self.singular_exponent
            ref = make_rule(parse_family(f"jacobi({-e},0)"), n)
            # (x - t) = scale * (1 - r) on the inner nodes, so dividing the kernel by
            # the weight (1 - r)^(-e) leaves the regular part times scale^(-e)
            A = ops.assemble_volterra(self.kernel, g, h, ref, x=x, inner_rule=ref,
                                      kernel_includes_weight=True)
        else:
            ref = make_rule("legendre", n)
            A = ops.assemble_volterra(self.kernel, g, h, ref, x=x)
        inner = b.pointset(np.asarray(A.R).reshape(-1, 1))
        f = self.integrand.compile(b, inner)
        shape = A.R.shape
        return lambda ev: ops.apply_volterra(A, _reshape(f(ev), shape))


def _reshape(value, shape):
    size = int(np.prod(shape))
    v = _full(value, size)
    return v.reshape(shape)


class Line(_Integral):
    """Integral along coordinate ``axis`` at each outer point (partial integro-differential terms).

    ``g`` and ``h`` are constants or callables of the ``(P, d)`` point array.
    """

    def __init__(self, kernel, integrand, axis: int, g=0.0, h=1.0):
        super().__init__(kernel, integrand)
        self.axis, self.g, self.h = axis, g, h

    def compile(self, b, ps):
        ref = make_rule("legendre", b.n[self.axis])
        A = ops.assemble_line(self.kernel, ps.points, self.axis, self.g, self.h, ref)
        pts = A.points
        inner = b.pointset(pts.reshape(-1, pts.shape[-1]))
        f = self.integrand.compile(b, inner)
        shape = A.S.shape
        return lambda ev: ops.apply_line(A, _reshape(f(ev), shape))


class _TensorIntegral(_Integral):
    def _outer(self, b, ps):
        if ps is not b.colloc:
            raise ProblemError("multi-dimensional operators act on the collocation grid only")

    def _finish(self, b, A, apply):
        pts = A.points
        inner = b.pointset(pts.reshape(-1, pts.shape[-1]))
        f = self.integrand.compile(b, inner)
        shape = pts.shape[:-1]
        return lambda ev: apply(A, _reshape(f(ev), shape)).reshape(-1)


class Fredholm2D(_TensorIntegral):
    """Fredholm operator over the whole 2-D domain."""

    def compile(self, b, ps):
        self._outer(b, ps)
        rx, ry = b.rules
        A = ops.assemble_fredholm_2d(self.kernel, rx, ry)
        return self._finish(b, A, ops.apply_fredholm_2d)


class Volterra2D(_TensorIntegral):
    """Volterra operator over ``[g1(x), h1(x)] x [g2(y), h2(y)]`` (defaults: domain start to the point)."""

    def __init__(self, kernel, integrand, g1=None, h1=None, g2=None, h2=None):
        super().__init__(kernel, integrand)
        self.bounds = (g1, h1, g2, h2)

    def compile(self, b, ps):
        self._outer(b, ps)
        rx, ry = b.rules
        g1, h1, g2, h2 = self.bounds
        ident = lambda v: v  # noqa: E731
        A = ops.assemble_volterra_2d(
            self.kernel,
            b.domain[0][0] if g1 is None else g1, ident if h1 is None else h1,
            b.domain[1][0] if g2 is None else g2, ident if h2 is None else h2,
            rx, ry)
        return self._finish(b, A, ops.apply_volterra_2d)


class Fredholm3D(_TensorIntegral):
    """Fredholm operator over the whole 3-D domain."""

    def compile(self, b, ps):
        self._outer(b, ps)
        rx, ry, rz = b.rules
        A = ops.assemble_fredholm_3d(self.kernel, rx, ry, rz)
        return self._finish(b, A, ops.apply_fredholm_3d)


def caputo_monomial_sum(coeffs, alpha: float, x):
    """Caputo derivative of ``sum_m coeffs[m] x^m`` (lower terminal 0), for building sources."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for m, c in enumerate(coeffs):
        if m == 0 or c == 0.0:
            continue
        out = out + c * math.gamma(m + 1) / math.gamma(m + 1 - alpha) * x ** (m - alpha)
    return out
