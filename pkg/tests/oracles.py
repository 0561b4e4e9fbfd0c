"""Brute-force reference implementations used only by the tests.

Everything here is written in the plainest possible way (explicit loops,
closed forms evaluated with mpmath) so that it shares no code paths with the
library.  Nothing in ``quadpinn`` may import this module.
"""

import math

import mpmath
import numpy as np

MOMENT_DEGREE = 25


# ---------------------------------------------------------------------------
# Moments m_k = int x^k w(x) dx


def _jacobi_moment(alpha, beta, k):
    # x = 2t - 1 turns the weight into 2^(a+b+1) t^b (1-t)^a on [0, 1]
    a, b = mpmath.mpf(alpha), mpmath.mpf(beta)
    total = mpmath.mpf(0)
    for j in range(k + 1):
        total += mpmath.binomial(k, j) * mpmath.mpf(2) ** j * (-1) ** (k - j) * mpmath.beta(b + j + 1, a + 1)
    return total * mpmath.mpf(2) ** (a + b + 1)


def moment(kind, k, alpha=0.0, beta=0.0):
    """Exact moment ``int x^k w(x) dx`` of a family weight, as an mpmath number."""
    with mpmath.workdps(60):
        if kind == "laguerre":
            return +mpmath.gamma(k + mpmath.mpf(alpha) + 1)
        if kind == "hermite":
            if k % 2:
                return mpmath.mpf(0)
            return +mpmath.gamma(mpmath.mpf(k + 1) / 2)
        params = {
            "legendre": (0.0, 0.0),
            "chebyshev1": (-0.5, -0.5),
            "chebyshev2": (0.5, 0.5),
            "chebyshev3": (-0.5, 0.5),
            "chebyshev4": (0.5, -0.5),
        }
        if kind in params:
            alpha, beta = params[kind]
        return +_jacobi_moment(alpha, beta, k)


def moment_table(kind, alpha=0.0, beta=0.0, degree=MOMENT_DEGREE):
    """Moments ``m_0..m_degree`` as floats."""
    return [float(moment(kind, k, alpha, beta)) for k in range(degree + 1)]


TOTAL_WEIGHT = {
    "legendre": 2.0,
    "chebyshev1": math.pi,
    "chebyshev2": math.pi / 2,
    "chebyshev3": math.pi,
    "chebyshev4": math.pi,
    "laguerre": 1.0,
    "hermite": math.sqrt(math.pi),
}


# ---------------------------------------------------------------------------
# Naive operator application


def naive_fredholm(kernel, u, x_points, a, b, nodes, weights):
    """``sum_j (b-a)/2 w_j K(x, t_j) u(t_j)`` for reference nodes on [-1, 1]."""
    out = []
    for x in x_points:
        total = 0.0
        for r, w in zip(nodes, weights):
            t = 0.5 * (b - a) * r + 0.5 * (a + b)
            total += 0.5 * (b - a) * w * kernel(x, t) * u(t)
        out.append(total)
    return np.array(out)


def naive_volterra(kernel, u, x_points, g, h, nodes, weights):
    out = []
    for x in x_points:
        lo, hi = g(x), h(x)
        total = 0.0
        for r, w in zip(nodes, weights):
            t = 0.5 * (hi - lo) * r + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * w * kernel(x, t) * u(t)
        out.append(total)
    return np.array(out)


def naive_fredholm_2d(kernel, u, xs, ys, box, nodes, weights):
    (a1, b1), (a2, b2) = box
    out = np.zeros((len(xs), len(ys)))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            total = 0.0
            for r1, w1 in zip(nodes, weights):
                s = 0.5 * (b1 - a1) * r1 + 0.5 * (a1 + b1)
                for r2, w2 in zip(nodes, weights):
                    t = 0.5 * (b2 - a2) * r2 + 0.5 * (a2 + b2)
                    total += 0.25 * (b1 - a1) * (b2 - a2) * w1 * w2 * kernel(x, y, s, t) * u(s, t)
            out[i, j] = total
    return out


def naive_volterra_2d(kernel, u, xs, ys, g1, h1, g2, h2, nodes, weights):
    out = np.zeros((len(xs), len(ys)))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            lo1, hi1, lo2, hi2 = g1(x), h1(x), g2(y), h2(y)
            total = 0.0
            for r1, w1 in zip(nodes, weights):
                s = 0.5 * (hi1 - lo1) * r1 + 0.5 * (hi1 + lo1)
                for r2, w2 in zip(nodes, weights):
                    t = 0.5 * (hi2 - lo2) * r2 + 0.5 * (hi2 + lo2)
                    total += 0.25 * (hi1 - lo1) * (hi2 - lo2) * w1 * w2 * kernel(x, y, s, t) * u(s, t)
            out[i, j] = total
    return out


def naive_fredholm_3d(kernel, u, xs, ys, zs, box, nodes, weights):
    (a1, b1), (a2, b2), (a3, b3) = box
    out = np.zeros((len(xs), len(ys), len(zs)))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            for k, z in enumerate(zs):
                total = 0.0
                for r1, w1 in zip(nodes, weights):
                    p = 0.5 * (b1 - a1) * r1 + 0.5 * (a1 + b1)
                    for r2, w2 in zip(nodes, weights):
                        q = 0.5 * (b2 - a2) * r2 + 0.5 * (a2 + b2)
                        for r3, w3 in zip(nodes, weights):
                            s = 0.5 * (b3 - a3) * r3 + 0.5 * (a3 + b3)
                            jac = 0.125 * (b1 - a1) * (b2 - a2) * (b3 - a3)
                            total += jac * w1 * w2 * w3 * kernel(x, y, z, p, q, s) * u(p, q, s)
                out[i, j, k] = total
    return out


# ---------------------------------------------------------------------------
# Caputo derivatives


def caputo_monomial(m, alpha, x):
    """Closed form ``Gamma(m+1) / Gamma(m+1-alpha) x^(m-alpha)`` for integer ``m >= 1``."""
    if x == 0:
        return 0.0
    return math.gamma(m + 1) / math.gamma(m + 1 - alpha) * x ** (m - alpha)


def naive_l1(u_values, grid, alpha):
    """L1 approximation at every grid point, straight from the piecewise-linear integral."""
    n = len(grid)
    out = np.zeros(n)
    c = 1.0 / math.gamma(2.0 - alpha)
    for i in range(1, n):
        total = 0.0
        for k in range(i):
            slope = (u_values[k + 1] - u_values[k]) / (grid[k + 1] - grid[k])
            total += slope * ((grid[i] - grid[k]) ** (1 - alpha) - (grid[i] - grid[k + 1]) ** (1 - alpha))
        out[i] = c * total
    return out


# ---------------------------------------------------------------------------
# Finite differences


def fd_gradient(f, x, h=1e-6):
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def fd_derivative(f, x, h=1e-4, order=1):
    """Central difference of a scalar function of one variable (orders 1 and 2)."""
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if order == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h)
    raise ValueError("order must be 1 or 2")
