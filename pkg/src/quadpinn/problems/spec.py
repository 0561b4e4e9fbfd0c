"""Declarative problem definitions and the run report."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .terms import Expr

__all__ = [
    "Condition",
    "DataSet",
    "TrainableParameter",
    "Defaults",
    "ProblemSpec",
    "OptimalControlSpec",
    "RunReport",
]


@dataclass(frozen=True)
class Condition:
    """``d^order u / d x_axis^order (point) = value`` at one or more points.

    ``points`` is a scalar (1-D), a coordinate tuple, or an array of shape
    ``(Q, d)``; ``value`` is a constant or a function of the coordinates.
    ``kind`` groups conditions for the loss weights (``"ic"`` or ``"bc"``).
    """

    unknown: str
    points: object
    value: Union[float, Callable] = 0.0
    order: int = 0
    axis: int = 0
    kind: str = "bc"

    def point_array(self, dim: int) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        if dim == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
            pts = pts.T
        if pts.shape[1] != dim:
            raise ValueError(f"condition points have dimension {pts.shape[1]}, expected {dim}")
        return pts

    def targets(self, pts: np.ndarray) -> np.ndarray:
        if callable(self.value):
            vals = self.value(*[pts[:, k] for k in range(pts.shape[1])])
        else:
            vals = self.value
        return np.broadcast_to(np.asarray(vals, dtype=np.float64), (pts.shape[0],)).copy()


@dataclass(frozen=True)
class DataSet:
    """Observed values of an unknown (inverse problems)."""

    unknown: str
    points: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class TrainableParameter:
    """A named unknown coefficient.

    ``size`` is 1 for a scalar or ``"collocation"`` for one value per
    collocation node.  ``truth`` is the value used to build the source term,
    when known (a constant or a function of the coordinates).
    """

    name: str
    size: Union[int, str] = 1
    init: float = 0.0
    truth: Union[None, float, Callable] = None


@dataclass(frozen=True)
class Defaults:
    """Per-suite training defaults (our calibration, not values from the source experiments)."""

    n_train: int = 30
    hidden: tuple = (10, 10)
    adam_epochs: int = 0
    adam_lr: float = 1e-3
    lbfgs_epochs: int = 150
    lr: float = 0.1
    lambdas: tuple = (("ic", 1.0), ("bc", 1.0), ("data", 1.0))

    def lambda_map(self) -> dict:
        return dict(self.lambdas)


@dataclass(frozen=True)
class ProblemSpec:
    """A forward or inverse problem ``residual_i(x) = 0`` on a box domain.

    ``equations`` holds one residual expression per equation (left side
    minus source).  ``exact`` maps unknown names to closed-form solutions
    written with ``quadpinn.autodiff`` functions, so they can stand in for
    the networks (including their derivatives).  ``reference_mae`` records the
    published MAE per unknown, used to scale acceptance thresholds.
    ``singular_rule`` is the default inner rule for weakly singular Volterra
    kernels (``"legendre"`` or ``"jacobi"``).
    """

    id: str
    title: str
    domain: tuple
    unknowns: tuple
    equations: tuple
    conditions: tuple = ()
    data: tuple = ()
    parameters: tuple = ()
    exact: Optional[dict] = None
    family: str = "legendre"
    singular_rule: str = "legendre"
    tolerance: float = 1e-6
    mae_domain: Optional[tuple] = None
    reference_mae: Optional[dict] = None
    defaults: Defaults = Defaults()
    group: str = ""
    notes: str = ""
    report: Optional[Callable] = None

    def __post_init__(self):
        if not self.equations:
            raise ValueError(f"{self.id}: at least one equation is required")
        if not all(isinstance(e, Expr) for e in self.equations):
            raise TypeError(f"{self.id}: equations must be expressions")
        for c in self.conditions:
            pts = c.point_array(self.dim)
            for k, (a, b) in enumerate(self.domain):
                if np.any(pts[:, k] < a - 1e-12) or np.any(pts[:, k] > b + 1e-12):
                    raise ValueError(f"{self.id}: condition point outside the domain")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError(f"{self.id}: duplicate parameter names")

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def kind(self) -> str:
        return "inverse" if self.parameters else "forward"

    @property
    def has_exact(self) -> bool:
        return bool(self.exact)


@dataclass(frozen=True)
class OptimalControlSpec:
    """Minimize ``int L(chi, u, t) dt`` subject to constraint residuals.

    ``states`` and ``controls`` name the unknowns (one network each, states
    first).  ``cost`` is the running cost expression.
    """

    id: str
    title: str
    domain: tuple
    states: tuple
    controls: tuple
    cost: Expr
    constraints: tuple
    conditions: tuple = ()
    gamma: float = 1e3
    exact: Optional[dict] = None
    reference_j: Optional[float] = None
    reference_note: str = ""
    reference_mae: Optional[dict] = None
    defaults: Defaults = Defaults()
    group: str = "optimal-control"
    notes: str = ""
    report: Optional[Callable] = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"{self.id}: gamma must be positive")
        if len(self.constraints) != len(self.states):
            raise ValueError(f"{self.id}: need one constraint per state")

    @property
    def unknowns(self) -> tuple:
        return tuple(self.states) + tuple(self.controls)

    @property
    def dim(self) -> int:
        return len(self.domain)

    @property
    def kind(self) -> str:
        return "optimal-control"

    @property
    def equations(self) -> tuple:
        return self.constraints

    @property
    def parameters(self) -> tuple:
        return ()

    @property
    def data(self) -> tuple:
        return ()

    @property
    def family(self) -> str:
        return "legendre"

    @property
    def singular_rule(self) -> str:
        return "legendre"

    @property
    def has_exact(self) -> bool:
        return bool(self.exact)

    mae_domain = None


@dataclass
class RunReport:
    """Record of one training run."""

    suite_id: str
    seed: int
    n_train: int
    widths: tuple
    adam_epochs: int
    lbfgs_epochs: int
    lr: float
    final_loss: float
    losses: list = field(repr=False)
    mae: Optional[float] = None
    mae_by_unknown: dict = field(default_factory=dict)
    j_value: Optional[float] = None
    parameters: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    wall_time_ms: float = 0.0
    stop_reason: str = ""
    params: Optional[np.ndarray] = field(default=None, repr=False)
    config: dict = field(default_factory=dict)
