"""L1 discretization of the Caputo fractional derivative.

For a grid ``x_0 < x_1 < ... < x_n`` and order ``0 < alpha < 1`` the Caputo
derivative at ``x_n`` is approximated by ``sum_k nu_k u(x_k)`` where, with

    mu_k = ((x_n - x_k)^(1-alpha) - (x_n - x_{k+1})^(1-alpha)) / (x_{k+1} - x_k),

the weights are ``nu_k = (mu_{k-1} - mu_k) / Gamma(2 - alpha)`` (taking
``mu_{-1} = mu_n = 0``).  This orientation gives a positive derivative for
increasing ``u``.  Stacking the weights of every prefix grid gives the
lower-triangular operational matrix ``M`` with ``M @ u ~ D^alpha u``.

Orders ``p = v + alpha`` with integer ``v >= 1`` are handled by applying the
``alpha`` matrix to samples of the ``v``-th derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from ._backend import kernels

__all__ = [
    "FractionalError",
    "CaputoMatrix",
    "l1_weights",
    "caputo_matrix",
    "apply_caputo",
    "caputo_higher",
    "split_order",
]


class FractionalError(ValueError):
    """Invalid fractional order or grid."""


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise FractionalError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64).reshape(-1)
    if g.size < 2:
        raise FractionalError("the L1 grid needs at least two points")
    if not np.all(np.isfinite(g)) or np.any(np.diff(g) <= 0.0):
        raise FractionalError("the L1 grid must be finite and strictly increasing")
    return g


def l1_weights(grid, alpha: float) -> np.ndarray:
    """Weights ``nu_0..nu_n`` approximating the Caputo derivative at ``grid[-1]``."""
    alpha = _check_alpha(alpha)
    g = _check_grid(grid)
    powered = (g[-1] - g) ** (1.0 - alpha)
    mu = (powered[:-1] - powered[1:]) / np.diff(g)
    padded = np.concatenate([[0.0], mu, [0.0]])
    return (padded[:-1] - padded[1:]) * math.exp(-math.lgamma(2.0 - alpha))


@dataclass(frozen=True)
class CaputoMatrix:
    """Operational matrix of order ``alpha`` on ``grid`` (row ``i`` acts at ``grid[i]``)."""

    alpha: float
    grid: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.size


def caputo_matrix(grid, alpha: float) -> CaputoMatrix:
    """Assemble the lower-triangular L1 matrix; row 0 is zero."""
    alpha = _check_alpha(alpha)
    g = _check_grid(grid)
    M = np.array(kernels.caputo_l1_matrix(g, alpha), dtype=np.float64)
    M.setflags(write=False)
    g = g.copy()
    g.setflags(write=False)
    return CaputoMatrix(alpha, g, M)


def apply_caputo(m: CaputoMatrix, u_on_grid):
    """``M @ u`` for grid samples ``u`` (numpy array or Tensor, shape (n,) or (n, 1))."""
    shape = u_on_grid.shape if isinstance(u_on_grid, ad.Tensor) else np.shape(u_on_grid)
    if tuple(shape) not in ((m.n,), (m.n, 1)):
        raise FractionalError(f"expected {m.n} grid values, got shape {tuple(shape)}")
    if isinstance(u_on_grid, ad.Tensor):
        return m.M @ (u_on_grid.reshape(m.n) if len(shape) == 2 else u_on_grid)
    return m.M @ np.asarray(u_on_grid, dtype=np.float64).reshape(m.n)


def split_order(p: float) -> tuple[int, float]:
    """Split ``p > 0`` into ``(v, alpha)`` with integer ``v`` and ``alpha`` in (0, 1)."""
    p = float(p)
    v = math.floor(p)
    alpha = p - v
    if p <= 0.0 or alpha <= 1e-12 or alpha >= 1.0 - 1e-12:
        raise FractionalError(f"order {p} is not fractional; use an ordinary derivative")
    return v, alpha


def caputo_higher(p: float, dv_values, grid):
    """Caputo derivative of order ``p > 1`` from samples of ``d^v u / dx^v``.

    ``v = floor(p)`` and the remaining order ``p - v`` is applied with the
    L1 matrix on ``grid``.  Integer ``p`` is rejected.
    """
    if float(p) <= 1.0:
        raise FractionalError(f"caputo_higher needs p > 1, got {p}; use caputo_matrix for p < 1")
    _, alpha = split_order(p)
    return apply_caputo(caputo_matrix(grid, alpha), dv_values)
