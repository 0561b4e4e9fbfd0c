"""Compile problem specs into residual and loss closures, and train them.

Parameter vector layout (canonical order): the networks' flat parameter
vectors in the order of ``spec.unknowns`` (states before controls for
optimal control), followed by trainable inverse parameters in declaration
order.  Network ``k`` of a run with seed ``s`` is initialized with seed
``s + k``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tape, Tensor, _recording
from ..network import Mlp, forward, mlp_new, param_gradient
from ..optimize import Schedule, train
from ..quadrature import gauss_legendre, make_rule, map_rule, parse_family
from .spec import OptimalControlSpec, ProblemSpec, RunReport
from .terms import ProblemError, _full

__all__ = [
    "PointSet",
    "Builder",
    "Evaluator",
    "CompiledProblem",
    "NetworkSet",
    "ParameterHandle",
    "Objective",
    "compile_problem",
    "exact_providers",
    "build_residual",
    "build_loss",
    "build_oc_loss",
    "register_inverse_parameters",
    "max_exact_residual",
    "simulate_cost",
    "evaluation_grid",
    "mae",
    "solve",
]

AnySpec = Union[ProblemSpec, OptimalControlSpec]


@dataclass
class PointSet:
    """Points (``P x d``) at which unknowns are evaluated; shared by identical arrays."""

    index: int
    points: np.ndarray = field(repr=False)
    needs_grad: bool = False

    @property
    def size(self) -> int:
        return self.points.shape[0]


class Builder:
    """Collocation layout and point-set registry used while compiling expressions."""

    def __init__(self, spec: AnySpec, n_train: Union[int, Sequence[int], None] = None,
                 singular_rule: Optional[str] = None):
        singular_rule = spec.singular_rule if singular_rule is None else singular_rule
        if singular_rule not in ("legendre", "jacobi"):
            raise ProblemError(f"singular_rule must be 'legendre' or 'jacobi', got {singular_rule!r}")
        self.spec = spec
        self.singular_rule = singular_rule
        self.domain = tuple((float(a), float(b)) for a, b in spec.domain)
        self.dim = len(self.domain)
        n_train = spec.defaults.n_train if n_train is None else n_train
        n = (int(n_train),) * self.dim if np.isscalar(n_train) else tuple(int(v) for v in n_train)
        if len(n) != self.dim or min(n) < 2:
            raise ProblemError(f"need at least 2 training points per axis, got {n}")
        self.n = n
        family = parse_family(spec.family)
        rules = []
        for k, (a, b) in enumerate(self.domain):
            if family.finite:
                rules.append(map_rule(make_rule(family, n[k]), a, b))
            else:
                if family.kind != "laguerre" or a != 0.0 or math.isfinite(b):
                    raise ProblemError("infinite collocation families need the domain [0, inf) and Laguerre")
                rules.append(make_rule(family, n[k]))
        self.rules = tuple(rules)
        grids = np.meshgrid(*[np.asarray(r.nodes) for r in rules], indexing="ij")
        self._pointsets: list[PointSet] = []
        self.colloc = self.pointset(np.stack([g.reshape(-1) for g in grids], axis=1))
        w = np.ones(1)
        for r in rules:
            w = np.kron(w, np.asarray(r.weights) * r.scale)
        self.weights = w
        self._unknowns = {name: k for k, name in enumerate(spec.unknowns)}
        self._params = {}
        for p in spec.parameters:
            self._params[p.name] = self.colloc.size if p.size == "collocation" else int(p.size)

    def pointset(self, points) -> PointSet:
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ProblemError(f"points must have shape (P, {self.dim}), got {pts.shape}")
        for ps in self._pointsets:
            if ps.points.shape == pts.shape and np.array_equal(ps.points, pts):
                return ps
        pts = pts.copy()
        pts.setflags(write=False)
        ps = PointSet(len(self._pointsets), pts)
        self._pointsets.append(ps)
        return ps

    def require_grad(self, ps: PointSet) -> None:
        ps.needs_grad = True

    def unknown_index(self, name) -> int:
        if isinstance(name, int):
            if not 0 <= name < len(self._unknowns):
                raise ProblemError(f"unknown index {name} out of range")
            return name
        if name not in self._unknowns:
            raise ProblemError(f"unknown function {name!r}; declared: {list(self._unknowns)}")
        return self._unknowns[name]

    def param_size(self, name: str) -> int:
        if name not in self._params:
            raise ProblemError(f"parameter {name!r} is not declared")
        return self._params[name]

    def fredholm_rule(self, axis: int, a: Optional[float], b: Optional[float]):
        lo, hi = self.domain[axis]
        a = lo if a is None else float(a)
        b = hi if b is None else float(b)
        if (a, b) == (lo, hi):
            return self.rules[axis]
        return gauss_legendre(self.n[axis], a, b)

    @property
    def pointsets(self) -> tuple:
        return tuple(self._pointsets)


class Evaluator:
    """Evaluates unknowns on point sets with per-call caching.

    Must be used while a tape is recording; input derivatives are taken on
    that tape with ``create_graph=True`` so they stay differentiable with
    respect to the parameters.
    """

    def __init__(self, providers: Sequence[Callable], params: Optional[dict] = None):
        self.tape = _recording()
        if self.tape is None:
            raise ProblemError("Evaluator needs an active tape")
        self.providers = list(providers)
        self.params = params or {}
        self._inputs: dict = {}
        self._cache: dict = {}

    def value(self, k: int, ps: PointSet):
        key = (k, ps.index, 0, 0)
        if key not in self._cache:
            xs = self._inputs.get(ps.index)
            if xs is None:
                xs = Tensor(ps.points, requires_grad=True) if ps.needs_grad else ps.points
                self._inputs[ps.index] = xs
            self._cache[key] = _full(self.providers[k](xs), ps.size)
        return self._cache[key]

    def deriv(self, k: int, ps: PointSet, order: int, axis: int):
        if order == 0:
            return self.value(k, ps)
        key = (k, ps.index, order, axis)
        if key not in self._cache:
            prev = self.deriv(k, ps, order - 1, axis)
            xs = self._inputs[ps.index]
            if not isinstance(prev, Tensor) or not prev.tracked or not isinstance(xs, Tensor):
                result = np.zeros(ps.size)
            else:
                g = self.tape.gradient(prev, xs, create_graph=True)
                result = np.zeros(ps.size) if g is None else g[:, axis]
            self._cache[key] = result
        return self._cache[key]

    def param(self, name: str):
        if name not in self.params:
            raise ProblemError(f"no value supplied for parameter {name!r}")
        return self.params[name]


@dataclass
class _CompiledCondition:
    kind: str
    fn: Callable = field(repr=False)
    targets: np.ndarray = field(repr=False)
    label: str = ""


class CompiledProblem:
    """All closures of a spec compiled for one collocation size."""

    def __init__(self, spec: AnySpec, n_train=None, singular_rule: Optional[str] = None,
                 cost_only: bool = False):
        from .terms import D, U

        self.spec = spec
        self.builder = b = Builder(spec, n_train, singular_rule)
        self.cost = spec.cost.compile(b, b.colloc) if isinstance(spec, OptimalControlSpec) else None
        self.equations = [] if cost_only else [e.compile(b, b.colloc) for e in spec.equations]
        self.conditions = []
        self.data = []
        if cost_only:
            return
        for c in spec.conditions:
            pts = c.point_array(b.dim)
            ps = b.pointset(pts)
            expr = U(c.unknown) if c.order == 0 else D(c.unknown, c.order, c.axis)
            self.conditions.append(_CompiledCondition(c.kind, expr.compile(b, ps), c.targets(pts),
                                                      f"{c.unknown}^({c.order})"))
        for d in spec.data:
            ps = b.pointset(np.asarray(d.points, dtype=np.float64).reshape(-1, b.dim))
            vals = np.asarray(d.values, dtype=np.float64).reshape(-1)
            self.data.append((U(d.unknown).compile(b, ps), vals))

    @property
    def n_colloc(self) -> int:
        return self.builder.colloc.size

    def evaluate(self, providers, params=None) -> dict:
        """Residuals, condition errors, data errors and running cost (inside a tape)."""
        ev = Evaluator(providers, params)
        size = self.n_colloc
        out = {
            "residuals": [_full(f(ev), size) for f in self.equations],
            "conditions": [(c.kind, _full(c.fn(ev), c.targets.size) - c.targets) for c in self.conditions],
            "data": [_full(f(ev), vals.size) - vals for f, vals in self.data],
        }
        if self.cost is not None:
            out["cost"] = _full(self.cost(ev), size)
        return out


def compile_problem(spec: AnySpec, n_train=None, singular_rule: Optional[str] = None) -> CompiledProblem:
    return CompiledProblem(spec, n_train, singular_rule)


def _call_columns(fn: Callable, X):
    d = X.shape[1]
    cols = [X[:, k] for k in range(d)]
    return _full(fn(*cols), X.shape[0])


def exact_providers(spec: AnySpec) -> list:
    """Closed-form solutions as providers (``X -> values``), in unknown order."""
    if not spec.exact:
        raise ProblemError(f"{spec.id} has no exact solution")
    missing = [u for u in spec.unknowns if u not in spec.exact]
    if missing:
        raise ProblemError(f"{spec.id}: no exact solution for {missing}")
    return [(lambda X, fn=spec.exact[u]: _call_columns(fn, X)) for u in spec.unknowns]


class NetworkSet:
    """One single-output MLP per unknown; network ``k`` uses seed ``seed + k``."""

    def __init__(self, n_unknowns: int, dim: int, hidden=(10, 10), seed: int = 42,
                 activation: str = "tanh", nets: Optional[list] = None):
        if nets is None:
            nets = [mlp_new((dim, *hidden, 1), activation, seed + k) for k in range(n_unknowns)]
        self.nets = list(nets)
        self.slices = []
        offset = 0
        for m in self.nets:
            self.slices.append(slice(offset, offset + m.n_params))
            offset += m.n_params
        self.n_params = offset

    @classmethod
    def from_mlps(cls, nets: Sequence[Mlp]) -> "NetworkSet":
        return cls(len(nets), nets[0].in_dim, nets=list(nets))

    def theta0(self) -> np.ndarray:
        if not self.nets:
            return np.zeros(0)
        return np.concatenate([m.params for m in self.nets])

    def providers(self, theta) -> list:
        return [(lambda X, m=m, sl=sl: forward(m, X, theta[sl]).reshape(-1))
                for m, sl in zip(self.nets, self.slices)]

    def with_theta(self, theta) -> list:
        theta = np.asarray(theta, dtype=np.float64)
        out = []
        for m, sl in zip(self.nets, self.slices):
            c = m.copy()
            c.params = theta[sl].copy()
            out.append(c)
        return out


@dataclass(frozen=True)
class ParameterHandle:
    """Location of a trainable inverse parameter in the flat vector."""

    name: str
    index: slice
    size: int
    init: np.ndarray = field(repr=False)


def register_inverse_parameters(spec: AnySpec, offset: int, n_colloc: int,
                                init: Optional[dict] = None) -> list:
    """Place the spec's trainable parameters after ``offset`` network parameters.

    ``init`` overrides the declared initial values by name.
    """
    init = init or {}
    handles = []
    seen = set()
    for p in spec.parameters:
        if p.name in seen:
            raise ProblemError(f"duplicate parameter name {p.name!r}")
        seen.add(p.name)
        size = n_colloc if p.size == "collocation" else int(p.size)
        value = init.get(p.name, p.init)
        vec = np.broadcast_to(np.asarray(value, dtype=np.float64), (size,)).copy()
        handles.append(ParameterHandle(p.name, slice(offset, offset + size), size, vec))
        offset += size
    unknown = set(init) - seen
    if unknown:
        raise ProblemError(f"initial values given for undeclared parameters {sorted(unknown)}")
    return handles


def _sq(v):
    return (v * v).sum()


class Objective:
    """Physics-informed loss of a compiled problem as a function of the flat vector."""

    def __init__(self, compiled: CompiledProblem, networks: Optional[NetworkSet] = None,
                 handles: Sequence[ParameterHandle] = (), lambdas: Optional[dict] = None,
                 gamma: Optional[float] = None, providers: Optional[list] = None):
        self.compiled = compiled
        self.networks = networks
        self.handles = list(handles)
        spec = compiled.spec
        self.lambdas = dict(spec.defaults.lambda_map())
        if lambdas:
            self.lambdas.update(lambdas)
        self.is_oc = isinstance(spec, OptimalControlSpec)
        self.gamma = (spec.gamma if gamma is None else float(gamma)) if self.is_oc else None
        if self.gamma is not None and self.gamma <= 0:
            raise ProblemError("gamma must be positive")
        self._fixed = providers
        if networks is None and providers is None:
            raise ProblemError("need networks or fixed providers")
        n_net = 0 if networks is None else networks.n_params
        self.size = n_net + sum(h.size for h in self.handles)

    def initial(self) -> np.ndarray:
        parts = [self.networks.theta0()] if self.networks is not None else []
        parts += [h.init for h in self.handles]
        return np.concatenate(parts) if parts else np.zeros(0)

    def _terms(self, th):
        providers = self._fixed if self._fixed is not None else self.networks.providers(th)
        params = {h.name: th[h.index] for h in self.handles}
        return self.compiled.evaluate(providers, params)

    def _combine(self, t: dict) -> dict:
        res = t["residuals"]
        size = self.compiled.n_colloc
        parts = {"residual": sum(_sq(r) for r in res) / (size * len(res))}
        if self.is_oc:
            parts["cost"] = (t["cost"] * self.compiled.builder.weights).sum()
            cond = 0.0
            for _, e in t["conditions"]:
                cond = cond + _sq(e) / e.size
            parts["conditions"] = cond
            parts["loss"] = parts["cost"] + self.gamma * (parts["residual"] + cond)
            return parts
        loss = parts["residual"]
        for kind in ("ic", "bc"):
            errs = [e for k, e in t["conditions"] if k == kind]
            if errs:
                parts[kind] = sum(_sq(e) for e in errs) / sum(e.size for e in errs)
                loss = loss + self.lambdas.get(kind, 1.0) * parts[kind]
        if t["data"]:
            parts["data"] = sum(_sq(e) for e in t["data"]) / sum(e.size for e in t["data"])
            loss = loss + self.lambdas.get("data", 1.0) * parts["data"]
        parts["loss"] = loss
        return parts

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.size != self.size:
            raise ProblemError(f"expected {self.size} parameters, got {theta.size}")
        return theta

    def loss_and_grad(self, theta) -> tuple[float, np.ndarray]:
        theta = self._check(theta)
        with Tape() as tape:
            th = Tensor(theta, requires_grad=True)
            loss = self._combine(self._terms(th))["loss"]
            if isinstance(loss, Tensor) and loss.tracked:
                grad = param_gradient(tape, loss.reshape(1), th)
            else:
                grad = np.zeros(self.size)
        return float(_value(loss)), grad

    def __call__(self, theta) -> float:
        return self.components(theta)["loss"]

    def components(self, theta) -> dict:
        theta = self._check(theta)
        with Tape():
            parts = self._combine(self._terms(Tensor(theta)))
        return {k: float(_value(v)) for k, v in parts.items()}

    def residuals(self, theta=None) -> list:
        theta = self._check(np.zeros(self.size) if theta is None else theta)
        with Tape():
            res = self._terms(Tensor(theta))["residuals"]
        return [np.asarray(_value(r), dtype=np.float64).copy() for r in res]


def _value(v):
    return v.data if isinstance(v, Tensor) else v


def _providers_and_networks(spec: AnySpec, networks, hidden=None, seed=42):
    if networks is None or networks == "exact":
        return None, exact_providers(spec)
    if isinstance(networks, NetworkSet):
        return networks, None
    items = list(networks)
    if items and all(isinstance(m, Mlp) for m in items):
        return NetworkSet.from_mlps(items), None
    if items and all(callable(f) for f in items):
        return None, items
    raise ProblemError("networks must be a NetworkSet, a list of Mlp, a list of providers or 'exact'")


def build_residual(spec: AnySpec, networks=None, n_train=None, singular_rule: Optional[str] = None,
                   params: Optional[dict] = None) -> Callable:
    """Return ``residual(theta=None) -> list of arrays`` (one per equation).

    ``networks`` may be ``None``/``"exact"`` (substitute the closed-form
    solutions), a list of :class:`~quadpinn.network.Mlp`, or a list of
    providers ``X -> values``.  ``params`` fixes inverse parameters by name.
    """
    compiled = compile_problem(spec, n_train, singular_rule)
    nets, fixed = _providers_and_networks(spec, networks)
    offset = 0 if nets is None else nets.n_params
    handles = register_inverse_parameters(spec, offset, compiled.n_colloc, params)
    obj = Objective(compiled, nets, handles, providers=fixed)
    default = obj.initial()
    return lambda theta=None: obj.residuals(default if theta is None else theta)


def build_loss(spec: ProblemSpec, networks=None, n_train=None, lambdas: Optional[dict] = None,
               singular_rule: Optional[str] = None, params: Optional[dict] = None) -> Objective:
    """Physics-informed loss ``mean residual^2 + sum_k lambda_k MSE_k`` as an :class:`Objective`."""
    if isinstance(spec, OptimalControlSpec):
        raise ProblemError("use build_oc_loss for optimal-control specs")
    compiled = compile_problem(spec, n_train, singular_rule)
    nets, fixed = _providers_and_networks(spec, networks)
    offset = 0 if nets is None else nets.n_params
    handles = register_inverse_parameters(spec, offset, compiled.n_colloc, params)
    return Objective(compiled, nets, handles, lambdas=lambdas, providers=fixed)


def build_oc_loss(spec: OptimalControlSpec, networks=None, n_train=None,
                  gamma: Optional[float] = None) -> Objective:
    """Loss ``J + gamma * (mean residual^2 + sum of per-condition MSE)``."""
    if not isinstance(spec, OptimalControlSpec):
        raise ProblemError("build_oc_loss needs an OptimalControlSpec")
    compiled = compile_problem(spec, n_train)
    nets, fixed = _providers_and_networks(spec, networks)
    return Objective(compiled, nets, gamma=gamma, providers=fixed)


def max_exact_residual(spec: AnySpec, n_train=None, singular_rule: Optional[str] = None) -> float:
    """Largest |residual| over all equations with the exact solution substituted.

    Inverse parameters are fixed at their declared true values.
    """
    truth = {}
    for p in spec.parameters:
        if p.truth is None:
            raise ProblemError(f"{spec.id}: parameter {p.name} has no true value")
        truth[p.name] = p.truth
    if any(callable(v) for v in truth.values()):
        builder = Builder(spec, n_train, singular_rule)
        pts = builder.colloc.points
        truth = {k: (v(*[pts[:, i] for i in range(pts.shape[1])]) if callable(v) else v)
                 for k, v in truth.items()}
    res = build_residual(spec, "exact", n_train, singular_rule, params=truth)()
    return float(max(np.abs(r).max() for r in res))


def simulate_cost(spec: OptimalControlSpec, providers, n_eval=None) -> float:
    """Running-cost integral for given solutions on a fresh Gauss-Legendre grid."""
    if n_eval is None:
        n_eval = 200 if spec.dim == 1 else 40
    compiled = CompiledProblem(spec, n_eval, cost_only=True)
    with Tape():
        values = compiled.evaluate(providers)["cost"]
    return float(np.asarray(_value(values)) @ compiled.builder.weights)


def evaluation_grid(spec: AnySpec) -> np.ndarray:
    """Equispaced MAE grid: 200 points in 1-D, 20x20 in 2-D, 8x8x8 in 3-D."""
    dom = spec.mae_domain or spec.domain
    count = {1: 200, 2: 20, 3: 8}[len(dom)]
    axes = [np.linspace(a, b, count) for a, b in dom]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def mae(exact, predicted) -> float:
    """Mean absolute error (true mean over the points)."""
    e = np.asarray(exact, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if e.size == 0:
        raise ValueError("mae of an empty vector")
    if e.shape != p.shape:
        raise ValueError(f"length mismatch: {e.size} vs {p.size}")
    return float(np.mean(np.abs(e - p)))


def _predict(m: Mlp, X: np.ndarray) -> np.ndarray:
    return forward(m, X).data.reshape(-1)


def solve(spec: AnySpec, n_train=None, hidden=None, seed: int = 42, adam_epochs=None, adam_lr=None,
          lbfgs_epochs=None, lr=None, gamma=None, singular_rule: Optional[str] = None,
          callback=None) -> RunReport:
    """Train networks for ``spec`` and return a :class:`RunReport`.

    Unset options fall back to ``spec.defaults``.
    """
    d = spec.defaults
    hidden = tuple(d.hidden if hidden is None else hidden)
    schedule = Schedule(
        adam_epochs=d.adam_epochs if adam_epochs is None else int(adam_epochs),
        adam_lr=d.adam_lr if adam_lr is None else float(adam_lr),
        lbfgs_epochs=d.lbfgs_epochs if lbfgs_epochs is None else int(lbfgs_epochs),
        lbfgs_lr=d.lr if lr is None else float(lr),
    )
    n_train = d.n_train if n_train is None else int(n_train)
    compiled = compile_problem(spec, n_train, singular_rule)
    nets = NetworkSet(len(spec.unknowns), spec.dim, hidden, seed)
    handles = register_inverse_parameters(spec, nets.n_params, compiled.n_colloc)
    obj = Objective(compiled, nets, handles, gamma=gamma)
    start = time.perf_counter()
    tr = train(obj.loss_and_grad, obj.initial(), schedule, callback)
    wall = (time.perf_counter() - start) * 1e3

    trained = nets.with_theta(tr.params)
    report = RunReport(
        suite_id=spec.id, seed=int(seed), n_train=n_train, widths=(spec.dim, *hidden, 1),
        adam_epochs=schedule.adam_epochs, lbfgs_epochs=schedule.lbfgs_epochs, lr=schedule.lbfgs_lr,
        final_loss=tr.final_loss, losses=list(tr.losses), wall_time_ms=wall,
        stop_reason=tr.stop_reason, params=tr.params,
        config={"adam_lr": schedule.adam_lr, "singular_rule": compiled.builder.singular_rule,
                "gamma": obj.gamma, "kind": spec.kind},
    )
    if spec.exact:
        grid = evaluation_grid(spec)
        for name, m in zip(spec.unknowns, trained):
            if name in spec.exact:
                report.mae_by_unknown[name] = mae(_call_columns(spec.exact[name], grid), _predict(m, grid))
        if report.mae_by_unknown:
            report.mae = max(report.mae_by_unknown.values())
    if isinstance(spec, OptimalControlSpec):
        providers = [(lambda X, m=m: forward(m, X).reshape(-1)) for m in trained]
        report.j_value = simulate_cost(spec, providers)
    for h in handles:
        vals = tr.params[h.index]
        report.parameters[h.name] = float(vals[0]) if h.size == 1 else vals.copy()
    if spec.report is not None:
        report.extras.update(spec.report(lambda X: np.column_stack([_predict(m, X) for m in trained])))
    return report
