"""Adam and L-BFGS on flat parameter vectors, plus the training driver.

Both optimizers work on a ``loss_and_grad(theta) -> (loss, grad)`` callback
where ``theta`` and ``grad`` are 1-D float64 arrays.

L-BFGS details (choices the method leaves open):

* direction from the two-loop recursion with initial Hessian scale
  ``gamma = s'y / y'y`` of the newest pair (1 with no history);
* backtracking Armijo line search, ``c1 = 1e-4``, shrink factor 0.5, at most
  25 trials; the first trial step is ``lr * min(1, 1/|g|_1)`` while the
  history is empty and 1 afterwards;
* if the first trial passes Armijo but fails the weak Wolfe curvature test
  (``c2 = 0.9``), the step is doubled while the loss keeps falling and
  Armijo still holds (at most 25 doublings);
* a pair ``(s, y)`` is stored only when ``s'y > 1e-10``; at most ``m`` pairs;
* a failed line search leaves the parameters unchanged, clears the history
  and reports the failure to the caller.

One L-BFGS epoch in :func:`train` is one such step.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NonFiniteLoss",
    "LbfgsState",
    "StepResult",
    "lbfgs_direction",
    "lbfgs_step",
    "AdamState",
    "adam_step",
    "Schedule",
    "TrainReport",
    "train",
]

LossAndGrad = Callable[[np.ndarray], tuple]

ARMIJO_C1 = 1e-4
SHRINK = 0.5
MAX_TRIALS = 25
MAX_EXPANSIONS = 25
WOLFE_C2 = 0.9
CURVATURE_EPS = 1e-10


class NonFiniteLoss(FloatingPointError):
    """Raised when the loss or gradient becomes NaN or infinite."""


@dataclass
class LbfgsState:
    """Curvature history and cached loss/gradient at the current iterate."""

    m: int = 10
    lr: float = 1.0
    s_hist: deque = field(default_factory=deque, repr=False)
    y_hist: deque = field(default_factory=deque, repr=False)
    iteration: int = 0
    n_evals: int = 0
    _x: Optional[np.ndarray] = field(default=None, repr=False)
    _f: float = field(default=math.nan, repr=False)
    _g: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("history size m must be positive")

    def reset(self) -> None:
        self.s_hist.clear()
        self.y_hist.clear()

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store a curvature pair if it passes the positive-curvature guard."""
        if float(s @ y) <= CURVATURE_EPS:
            return False
        self.s_hist.append(s)
        self.y_hist.append(y)
        while len(self.s_hist) > self.m:
            self.s_hist.popleft()
            self.y_hist.popleft()
        return True

    def evaluate(self, fn: LossAndGrad, x: np.ndarray) -> tuple[float, np.ndarray]:
        if self._x is not None and self._x.shape == x.shape and np.array_equal(self._x, x):
            return self._f, self._g
        f, g = fn(x)
        self.n_evals += 1
        f = float(f)
        g = np.asarray(g, dtype=np.float64)
        self._x, self._f, self._g = x.copy(), f, g
        return f, g


@dataclass(frozen=True)
class StepResult:
    params: np.ndarray
    loss: float
    accepted: bool
    step: float


def lbfgs_direction(state: LbfgsState, g: np.ndarray) -> np.ndarray:
    """Two-loop recursion: returns ``-H g`` for the stored history."""
    q = g.copy()
    pairs = list(zip(state.s_hist, state.y_hist))
    alphas = []
    for s, y in reversed(pairs):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((rho, a))
    if pairs:
        s, y = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y), (rho, a) in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def lbfgs_step(state: LbfgsState, params: np.ndarray, loss_and_grad: LossAndGrad) -> StepResult:
    """One L-BFGS iteration with backtracking Armijo line search."""
    x = np.asarray(params, dtype=np.float64)
    f, g = state.evaluate(loss_and_grad, x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise NonFiniteLoss(f"non-finite loss or gradient at L-BFGS iteration {state.iteration}")
    d = lbfgs_direction(state, g)
    slope = float(g @ d)
    if not slope < 0.0:
        state.reset()
        d = -g
        slope = float(g @ d)
    if slope == 0.0:
        return StepResult(x, f, False, 0.0)
    if state.s_hist:
        t = 1.0
    else:
        t = state.lr * min(1.0, 1.0 / float(np.abs(g).sum()))
    state.iteration += 1
    for trial in range(MAX_TRIALS):
        x_new = x + t * d
        f_new, g_new = state.evaluate(loss_and_grad, x_new)
        if math.isfinite(f_new) and np.all(np.isfinite(g_new)) and f_new <= f + ARMIJO_C1 * t * slope:
            if trial == 0:
                x_new, f_new, g_new, t = _expand(state, loss_and_grad, x, f, slope, d, x_new, f_new, g_new, t)
            state._x, state._f, state._g = x_new.copy(), f_new, g_new
            state.push(x_new - x, g_new - g)
            return StepResult(x_new, f_new, True, t)
        t *= SHRINK
    state.reset()
    state._x, state._f, state._g = x.copy(), f, g
    return StepResult(x, f, False, 0.0)


def _expand(state, loss_and_grad, x, f, slope, d, x_new, f_new, g_new, t):
    """Double an accepted first trial while it is too short.

    A step is too short when the weak Wolfe curvature test fails
    (``g_new'd < c2 * g'd``): the loss is still falling steeply along ``d``.
    Doubling stops at the first trial that breaks the Armijo test or stops
    lowering the loss, and the best Armijo point is kept.
    """
    for _ in range(MAX_EXPANSIONS):
        if float(g_new @ d) >= WOLFE_C2 * slope:
            break
        t_try = 2.0 * t
        x_try = x + t_try * d
        f_try, g_try = state.evaluate(loss_and_grad, x_try)
        ok = math.isfinite(f_try) and np.all(np.isfinite(g_try))
        if not ok or f_try > f + ARMIJO_C1 * t_try * slope or f_try >= f_new:
            break
        x_new, f_new, g_new, t = x_try, f_try, g_try, t_try
    return x_new, f_new, g_new, t


@dataclass
class AdamState:
    """Moment estimates for Adam with bias correction."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: Optional[np.ndarray] = field(default=None, repr=False)
    v: Optional[np.ndarray] = field(default=None, repr=False)
    t: int = 0


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Return the parameters after one Adam update."""
    g = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise NonFiniteLoss(f"non-finite gradient at Adam step {state.t + 1}")
    if state.m is None:
        state.m = np.zeros_like(g)
        state.v = np.zeros_like(g)
    if state.m.shape != g.shape:
        raise ValueError(f"gradient shape {g.shape} does not match Adam state {state.m.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return np.asarray(params, dtype=np.float64) - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass(frozen=True)
class Schedule:
    """Optional Adam phase followed by an optional L-BFGS phase."""

    adam_epochs: int = 0
    adam_lr: float = 1e-3
    lbfgs_epochs: int = 100
    lbfgs_lr: float = 0.1
    history: int = 10
    tol: float = 1e-14
    max_failures: int = 3

    def __post_init__(self):
        if self.adam_epochs < 0 or self.lbfgs_epochs < 0:
            raise ValueError("epoch counts must be non-negative")


@dataclass
class TrainReport:
    """Outcome of :func:`train`; ``losses[0]`` is the initial loss."""

    params: np.ndarray = field(repr=False)
    losses: list
    final_loss: float
    wall_time: float
    stop_reason: str
    n_evals: int
    adam_epochs_run: int = 0
    lbfgs_epochs_run: int = 0


def train(loss_and_grad: LossAndGrad, theta0, schedule: Schedule = Schedule(),
          callback: Optional[Callable[[str, int, float, np.ndarray], None]] = None) -> TrainReport:
    """Run the schedule; stops early when the loss drops below ``schedule.tol``
    or the line search fails ``schedule.max_failures`` times in a row.

    ``callback(phase, epoch, loss, params)`` is called after every epoch.
    """
    start = time.perf_counter()
    theta = np.array(theta0, dtype=np.float64)
    f, g = loss_and_grad(theta)
    f = float(f)
    n_evals = 1
    if not math.isfinite(f):
        raise NonFiniteLoss("initial loss is not finite")
    losses = [f]
    reason = "completed"
    adam_run = lbfgs_run = 0

    if schedule.adam_epochs > 0 and f >= schedule.tol:
        state = AdamState(lr=schedule.adam_lr)
        for epoch in range(1, schedule.adam_epochs + 1):
            theta = adam_step(state, theta, g)
            f, g = loss_and_grad(theta)
            f = float(f)
            n_evals += 1
            if not math.isfinite(f):
                raise NonFiniteLoss(f"loss became {f} at Adam epoch {epoch}")
            losses.append(f)
            adam_run = epoch
            if callback is not None:
                callback("adam", epoch, f, theta)
            if f < schedule.tol:
                reason = "tolerance"
                break

    if schedule.lbfgs_epochs > 0 and reason == "completed" and f >= schedule.tol:
        state = LbfgsState(m=schedule.history, lr=schedule.lbfgs_lr)
        state._x, state._f, state._g = theta.copy(), f, np.asarray(g, dtype=np.float64)
        failures = 0
        for epoch in range(1, schedule.lbfgs_epochs + 1):
            result = lbfgs_step(state, theta, loss_and_grad)
            theta, f = result.params, result.loss
            losses.append(f)
            lbfgs_run = epoch
            failures = 0 if result.accepted else failures + 1
            if callback is not None:
                callback("lbfgs", epoch, f, theta)
            if f < schedule.tol:
                reason = "tolerance"
                break
            if failures >= schedule.max_failures:
                reason = "line-search"
                break
        n_evals += state.n_evals
    elif f < schedule.tol:
        reason = "tolerance"

    return TrainReport(theta, losses, float(losses[-1]), time.perf_counter() - start, reason,
                       n_evals, adam_run, lbfgs_run)
