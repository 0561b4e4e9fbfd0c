"""Suite runs, hyperparameter sweeps and the quadrature comparison, with CSV/JSON reports.

Report schema (one row per suite and seed, or per sweep cell).  CSV is the
canonical format: UTF-8, LF line endings, ``.`` as decimal separator and
reals written with 17 significant digits; JSON holds the same rows as an
array of objects with the same string values.

==============  ==========================================================
column          meaning
==============  ==========================================================
suite_id        registry ID
n_train         collocation points per axis
widths          layer widths joined by ``-`` (e.g. ``1-10-10-1``)
adam_epochs     Adam epochs requested
lbfgs_epochs    L-BFGS epochs requested
lr              L-BFGS first-step scale
seed            network seed
adam_lr         Adam learning rate
gamma           optimal-control trade-off parameter (empty otherwise)
singular_rule   inner rule for weakly singular kernels (``legendre``/``jacobi``)
family          collocation family (empty for optimal control)
final_loss      loss after training (``nan`` if training diverged)
mae             max over unknowns of the test-grid MAE (empty without exact solution)
j_value         simulated cost (optimal control only)
wall_time_ms    training wall time; the only non-deterministic column
stop_reason     ``completed``, ``tolerance``, ``line-search`` or ``non-finite``
best            ``1`` on the best row among the seeds of a suite, else ``0``
mae_by_unknown  JSON object of per-unknown MAE
parameters      JSON object of recovered inverse parameters
extras          JSON object of suite-specific outputs (population u_max, ...)
==============  ==========================================================
"""

from __future__ import annotations

import csv
import dataclasses
import fnmatch
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .optimize import NonFiniteLoss
from .problems import ProblemSpec, get_spec, solve, suite_ids
from .quadrature import gauss_legendre, monte_carlo, trapezoid

__all__ = [
    "BenchError",
    "UnknownSuite",
    "BenchConfig",
    "COLUMNS",
    "QUAD_COLUMNS",
    "OUT_DIR_ENV",
    "select_suites",
    "run_suites",
    "sweep",
    "quad_compare",
    "QUAD_FUNCTIONS",
    "format_real",
    "write_report",
    "read_report",
    "parse_row",
    "config_from_row",
    "default_out_dir",
]

OUT_DIR_ENV = "QUADPINN_OUT_DIR"

COLUMNS = ("suite_id", "n_train", "widths", "adam_epochs", "lbfgs_epochs", "lr", "seed",
           "adam_lr", "gamma", "singular_rule", "family", "final_loss", "mae", "j_value", "wall_time_ms", "stop_reason", "best",
           "mae_by_unknown", "parameters", "extras")

QUAD_COLUMNS = ("function", "a", "b", "n", "exact", "gauss_error", "trapezoid_error", "mc_error", "seed")


class BenchError(ValueError):
    """Invalid bench configuration."""


class UnknownSuite(BenchError):
    def __init__(self, pattern: str):
        super().__init__(f"no suite matches {pattern!r}; valid IDs: {', '.join(suite_ids())}")
        self.pattern = pattern


@dataclass(frozen=True)
class BenchConfig:
    """Settings of one training run; ``None`` means the suite default."""

    suite: str
    n_train: Optional[int] = None
    hidden: Optional[tuple] = None
    adam_epochs: Optional[int] = None
    lbfgs_epochs: Optional[int] = None
    lr: Optional[float] = None
    adam_lr: Optional[float] = None
    seed: int = 42
    gamma: Optional[float] = None
    singular_rule: Optional[str] = None
    family: Optional[str] = None

    def __post_init__(self):
        if self.n_train is not None and self.n_train < 2:
            raise BenchError("n_train must be at least 2")
        if self.adam_epochs == 0 and self.lbfgs_epochs == 0:
            raise BenchError("at least one optimizer phase needs epochs > 0")
        if self.hidden is not None and (not self.hidden or min(self.hidden) < 1):
            raise BenchError("hidden widths must be positive")


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "."))


def select_suites(patterns: Sequence[str]) -> list:
    """Expand glob patterns over registry IDs, keeping registry order."""
    ids = suite_ids()
    chosen = []
    for pat in patterns:
        hits = [i for i in ids if fnmatch.fnmatchcase(i, pat)]
        if not hits:
            raise UnknownSuite(pat)
        chosen.extend(h for h in hits if h not in chosen)
    return chosen


def format_real(value) -> str:
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _json_value(v):
    if isinstance(v, np.ndarray):
        return [float(x) for x in v.reshape(-1)]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    return v


def _json(d: dict) -> str:
    return json.dumps({k: _json_value(v) for k, v in sorted(d.items())}, sort_keys=True)


def _spec_for(cfg: BenchConfig):
    spec = get_spec(cfg.suite)
    if cfg.family is not None:
        if not isinstance(spec, ProblemSpec):
            raise BenchError(f"{cfg.suite}: the collocation family can only be changed for forward/inverse specs")
        spec = dataclasses.replace(spec, family=cfg.family)
    return spec


def _run_one(cfg: BenchConfig) -> dict:
    spec = _spec_for(cfg)
    d = spec.defaults
    hidden = tuple(d.hidden if cfg.hidden is None else cfg.hidden)
    row = {
        "suite_id": spec.id,
        "n_train": d.n_train if cfg.n_train is None else cfg.n_train,
        "widths": "-".join(str(w) for w in (spec.dim, *hidden, 1)),
        "adam_epochs": d.adam_epochs if cfg.adam_epochs is None else cfg.adam_epochs,
        "lbfgs_epochs": d.lbfgs_epochs if cfg.lbfgs_epochs is None else cfg.lbfgs_epochs,
        "lr": d.lr if cfg.lr is None else cfg.lr,
        "seed": cfg.seed,
        "adam_lr": d.adam_lr if cfg.adam_lr is None else cfg.adam_lr,
        "gamma": (spec.gamma if cfg.gamma is None else cfg.gamma) if spec.kind == "optimal-control" else None,
        "singular_rule": spec.singular_rule if cfg.singular_rule is None else cfg.singular_rule,
        "family": spec.family if isinstance(spec, ProblemSpec) else None,
    }
    try:
        rep = solve(spec, n_train=cfg.n_train, hidden=hidden, seed=cfg.seed, adam_epochs=cfg.adam_epochs,
                    adam_lr=cfg.adam_lr, lbfgs_epochs=cfg.lbfgs_epochs, lr=cfg.lr, gamma=cfg.gamma,
                    singular_rule=cfg.singular_rule)
    except NonFiniteLoss:
        row.update(final_loss=math.nan, mae=None, j_value=None, wall_time_ms=0.0,
                   stop_reason="non-finite", mae_by_unknown={}, parameters={}, extras={})
        return row
    row.update(final_loss=rep.final_loss, mae=rep.mae, j_value=rep.j_value, wall_time_ms=rep.wall_time_ms,
               stop_reason=rep.stop_reason, mae_by_unknown=rep.mae_by_unknown,
               parameters=rep.parameters, extras=rep.extras)
    return row


def _score(row: dict) -> float:
    if row["stop_reason"] == "non-finite":
        return math.inf
    if row.get("mae") is not None:
        return row["mae"]
    return row["final_loss"]


def _mark_best(rows: list, key: str = "suite_id") -> None:
    groups: dict = {}
    for i, row in enumerate(rows):
        groups.setdefault(row[key], []).append(i)
    for idx in groups.values():
        best = min(idx, key=lambda i: (_score(rows[i]), i))
        for i in idx:
            rows[i]["best"] = int(i == best)


def _map(configs: list, workers: int) -> list:
    if workers <= 1 or len(configs) <= 1:
        return [_run_one(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, configs))


def run_suites(patterns: Sequence[str], seeds: Sequence[int] = (42,), workers: int = 1, **overrides) -> list:
    """Train every selected suite for every seed; rows come back in (suite, seed) order."""
    ids = select_suites(patterns)
    configs = [BenchConfig(suite=i, seed=int(s), **overrides) for i in ids for s in seeds]
    rows = _map(configs, workers)
    _mark_best(rows)
    return rows


def sweep(patterns: Sequence[str] = ("ex*",), n_values: Sequence[int] = (None,),
          hidden_values: Sequence[Optional[tuple]] = (None,), lr_values: Sequence[Optional[float]] = (None,),
          seed: int = 42, workers: int = 1, **overrides) -> list:
    """Cartesian product of n_train, hidden widths and lr over the selected suites (long format)."""
    ids = select_suites(patterns)
    cells = [(i, n, h, lr) for i in ids for n in n_values for h in hidden_values for lr in lr_values]
    if not cells:
        raise BenchError("the sweep product is empty")
    configs = [BenchConfig(suite=i, n_train=n, hidden=h, lr=lr, seed=seed, **overrides) for i, n, h, lr in cells]
    rows = _map(configs, workers)
    for row in rows:
        row["best"] = 1
    return rows


# ---------------------------------------------------------------------------
# quadrature comparison

QUAD_FUNCTIONS = {
    # id: (function, antiderivative); representative stand-ins for the comparison figure
    "exp": (np.exp, np.exp),
    "sin": (np.sin, lambda x: -np.cos(x)),
    "runge": (lambda x: 1.0 / (1.0 + 25.0 * x * x), lambda x: np.arctan(5.0 * x) / 5.0),
    "sqrt": (np.sqrt, lambda x: 2.0 / 3.0 * np.power(x, 1.5)),
    "const": (lambda x: np.full_like(np.asarray(x, dtype=np.float64), 3.0), lambda x: 3.0 * x),
}


def quad_compare(function: str, a: float, b: float, n_values: Sequence[int], seed: int = 0) -> list:
    """Absolute errors of Gauss-Legendre, trapezoid and Monte Carlo with ``n`` samples each."""
    if function not in QUAD_FUNCTIONS:
        raise BenchError(f"unknown function {function!r}; choose from {sorted(QUAD_FUNCTIONS)}")
    f, F = QUAD_FUNCTIONS[function]
    exact = float(F(b) - F(a))
    rows = []
    for n in n_values:
        n = int(n)
        if n < 2:
            raise BenchError("n must be at least 2")
        rule = gauss_legendre(n, a, b)
        gauss = float(rule.scale * np.dot(rule.weights, f(rule.nodes)))
        trap = trapezoid(f(np.linspace(a, b, n)), a, b)
        mc = monte_carlo(f, a, b, n, seed)
        rows.append({"function": function, "a": a, "b": b, "n": n, "exact": exact,
                     "gauss_error": abs(gauss - exact), "trapezoid_error": abs(trap - exact),
                     "mc_error": abs(mc - exact), "seed": seed})
    return rows


# ---------------------------------------------------------------------------
# serialization

_INT_COLUMNS = {"n_train", "adam_epochs", "lbfgs_epochs", "seed", "best", "n"}
_JSON_COLUMNS = {"mae_by_unknown", "parameters", "extras"}
_STR_COLUMNS = {"suite_id", "widths", "stop_reason", "function", "singular_rule", "family"}


def _cell(name: str, value) -> str:
    if name in _JSON_COLUMNS:
        return _json(value or {})
    if value is None:
        return ""
    if name in _STR_COLUMNS:
        return str(value)
    if name in _INT_COLUMNS:
        return str(int(value))
    return format_real(value)


def _columns_for(rows: list) -> tuple:
    return QUAD_COLUMNS if rows and "gauss_error" in rows[0] else COLUMNS


def write_report(rows: list, path, fmt: Optional[str] = None) -> Path:
    """Write rows as CSV or JSON (chosen by ``fmt`` or the file extension)."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt not in ("csv", "json"):
        raise BenchError(f"unknown format {fmt!r}")
    cols = _columns_for(rows)
    table = [{c: _cell(c, r.get(c)) for c in cols} for r in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        writer.writerows(table)
        text = buf.getvalue()
    else:
        text = json.dumps(table, indent=1) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def parse_row(row: dict) -> dict:
    """Convert string cells back to typed values."""
    out = {}
    for k, v in row.items():
        if k in _JSON_COLUMNS:
            out[k] = json.loads(v) if v else {}
        elif v == "":
            out[k] = None
        elif k in _STR_COLUMNS:
            out[k] = v
        elif k in _INT_COLUMNS:
            out[k] = int(v)
        else:
            out[k] = float(v)
    return out


def read_report(path) -> list:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        if path.suffix.lower() == ".json":
            raw = json.load(fh)
        else:
            raw = list(csv.DictReader(fh))
    return [parse_row(r) for r in raw]


def config_from_row(row: dict) -> BenchConfig:
    """Rebuild the run configuration of a parsed report row."""
    widths = tuple(int(w) for w in row["widths"].split("-"))
    return BenchConfig(suite=row["suite_id"], n_train=row["n_train"], hidden=widths[1:-1],
                       adam_epochs=row["adam_epochs"], lbfgs_epochs=row["lbfgs_epochs"], lr=row["lr"],
                       adam_lr=row.get("adam_lr"), seed=row["seed"], gamma=row.get("gamma"),
                       singular_rule=row.get("singular_rule"), family=row.get("family"))
