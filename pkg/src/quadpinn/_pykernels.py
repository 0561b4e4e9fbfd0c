"""Pure-numpy versions of the hot numerical kernels.

This module mirrors ``_ckernels.pyx`` function for function.  It is used when
the compiled extension is unavailable or when ``QUADPINN_BACKEND=python``.

Family codes shared with the compiled module:

* ``0``: Jacobi ``P_n^{(a, b)}`` (Legendre and Chebyshev are special cases)
* ``1``: scaled Laguerre functions ``exp(-x/2) c_n L_n^{(a)}(x)`` with
  ``c_n = sqrt(n!/Gamma(n+a+1))``.  They share the roots of ``L_n^{(a)}`` but
  stay of order one, so large rules do not overflow.
* ``2``: orthonormal Hermite (weight ``exp(-x^2)``)
"""

from __future__ import annotations

import math

import numpy as np

JACOBI = 0
LAGUERRE = 1
HERMITE = 2

BACKEND_NAME = "python"


def _jacobi_values(n: int, a: float, b: float, x: np.ndarray) -> np.ndarray:
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev
    p = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    for k in range(2, n + 1):
        c = 2.0 * k + a + b
        a1 = 2.0 * k * (k + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b)
        a3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        p_prev, p = p, (a2 * p - a3 * p_prev) / a1
    return p


def _laguerre_scaled(n: int, a: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``exp(-x/2) c_n`` times ``(L_n^{(a)}, d/dx L_n^{(a)})``."""
    p_prev = np.zeros_like(x)
    p = np.exp(-0.5 * x - 0.5 * math.lgamma(a + 1.0))
    for k in range(1, n + 1):
        p_prev, p = p, ((2.0 * k - 1.0 + a - x) * p
                        - math.sqrt((k - 1.0) * (k - 1.0 + a)) * p_prev) / math.sqrt(k * (k + a))
    deriv = (n * p - math.sqrt(n * (n + a)) * p_prev) / x
    return p, deriv


def _hermite_orthonormal(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(p_n, p_{n-1})`` of the orthonormal Hermite family."""
    p_prev = np.zeros_like(x)
    p = np.full_like(x, math.pi ** -0.25)
    for k in range(1, n + 1):
        p_prev, p = p, x * math.sqrt(2.0 / k) * p - math.sqrt((k - 1.0) / k) * p_prev
    return p, p_prev


def poly_and_derivative(family: int, n: int, a: float, b: float,
                        x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the family polynomial of degree ``n`` and its derivative at ``x``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if family == JACOBI:
        value = _jacobi_values(n, a, b, x)
        if n == 0:
            return value, np.zeros_like(x)
        deriv = 0.5 * (n + a + b + 1.0) * _jacobi_values(n - 1, a + 1.0, b + 1.0, x)
        return value, deriv
    if family == LAGUERRE:
        return _laguerre_scaled(n, a, x)
    if family == HERMITE:
        value, prev = _hermite_orthonormal(n, x)
        return value, math.sqrt(2.0 * n) * prev
    raise ValueError(f"unknown family code {family}")


def polish_roots(family: int, n: int, a: float, b: float, x0: np.ndarray,
                 max_sweeps: int = 100, tol: float = 1e-15):
    """Refine approximate roots with simultaneous Aberth corrections.

    Returns ``(roots, derivative_at_roots, sweeps, worst_index)``.  ``sweeps``
    is negative when the cap was reached; ``worst_index`` then names the node
    with the largest remaining step.
    """
    x = np.array(x0, dtype=np.float64)
    sweeps_done = -max_sweeps
    worst = -1
    settled = False
    for sweep in range(1, max_sweeps + 1):
        p, dp = poly_and_derivative(family, n, a, b, x)
        ratio = p / dp
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = np.sum(1.0 / diff, axis=1)
        step = ratio / (1.0 - ratio * repulsion)
        x = x - step
        rel = np.abs(step) / np.maximum(1.0, np.abs(x))
        worst = int(np.argmax(rel))
        if settled:
            sweeps_done = sweep
            break
        if rel[worst] <= tol * 64.0:
            settled = True
    _, dp = poly_and_derivative(family, n, a, b, x)
    return x, dp, sweeps_done, worst


def caputo_l1_matrix(grid: np.ndarray, alpha: float) -> np.ndarray:
    """Lower-triangular L1 operational matrix (row 0 is zero)."""
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    n = grid.shape[0]
    inv_gamma = math.exp(-math.lgamma(2.0 - alpha))
    one_minus = 1.0 - alpha
    m = np.zeros((n, n))
    spacing = np.diff(grid)
    for i in range(1, n):
        dist = grid[i] - grid[: i + 1]
        powered = dist ** one_minus
        mu = (powered[:-1] - powered[1:]) / spacing[:i]
        row = np.empty(i + 1)
        row[0] = -mu[0]
        row[1:i] = mu[:-1] - mu[1:]
        row[i] = mu[i - 1]
        m[i, : i + 1] = row * inv_gamma
    return m
