"""Command-line interface: ``quadpinn {run,sweep,quad-compare,list}``.

Exit codes: 0 on success, 1 for an unknown suite or invalid arguments, 2 when
any training run produced a non-finite loss.  Reports go to ``--out``; a
relative or missing path is placed in ``$QUADPINN_OUT_DIR`` (default: the
current directory).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench
from .problems import suite_registry


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _hidden(text: str) -> tuple:
    return tuple(_ints(text))


def _out_path(out: Optional[str], default_name: str, fmt: Optional[str]) -> Path:
    if out is None:
        path = Path(default_name + "." + (fmt or "csv"))
    else:
        path = Path(out)
    if not path.is_absolute():
        path = bench.default_out_dir() / path
    return path


def _training_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs-adam", type=int, default=None, dest="adam_epochs", help="Adam epochs")
    p.add_argument("--epochs-lbfgs", type=int, default=None, dest="lbfgs_epochs", help="L-BFGS epochs")
    p.add_argument("--adam-lr", type=float, default=None, help="Adam learning rate")
    p.add_argument("--gamma", type=float, default=None, help="optimal-control trade-off parameter")
    p.add_argument("--abel-rule", choices=("legendre", "jacobi"), default=None, dest="singular_rule",
                   help="inner rule for weakly singular Volterra kernels")
    p.add_argument("--family", default=None, help="collocation family override, e.g. chebyshev1")
    p.add_argument("--workers", type=int, default=1, help="parallel training processes")
    p.add_argument("--out", default=None, help="report path (.csv or .json)")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadpinn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train registered suites")
    run.add_argument("--suite", required=True, action="append",
                     help="suite ID or glob (repeatable, comma-separated)")
    run.add_argument("--n", type=int, default=None, dest="n_train", help="training points per axis")
    run.add_argument("--hidden", type=_hidden, default=None, help="hidden widths, e.g. 10,10")
    run.add_argument("--lr", type=float, default=None, help="L-BFGS first-step scale")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, default=42)
    seeds.add_argument("--seeds", type=int, default=None, help="run seeds 42..42+k-1 and mark the best row")
    _training_args(run)

    sw = sub.add_parser("sweep", help="hyperparameter sweep (Cartesian product)")
    sw.add_argument("--suite", action="append", default=None, help="suite ID or glob (default ex*)")
    sw.add_argument("--n", type=_ints, default=None, dest="n_values", help="comma list of n_train")
    sw.add_argument("--hidden", nargs="+", type=_hidden, default=None,
                    help="one or more hidden-width lists, e.g. 10,10 20,20")
    sw.add_argument("--lr", type=_floats, default=None, dest="lr_values", help="comma list of lr")
    sw.add_argument("--seed", type=int, default=42)
    _training_args(sw)

    qc = sub.add_parser("quad-compare", help="Gauss-Legendre vs trapezoid vs Monte Carlo")
    qc.add_argument("--function", default="exp", help=f"one of {sorted(bench.QUAD_FUNCTIONS)}")
    qc.add_argument("--a", type=float, default=0.0)
    qc.add_argument("--b", type=float, default=1.0)
    qc.add_argument("--n", type=_ints, default=[2, 4, 8, 16, 32, 64], dest="n_values")
    qc.add_argument("--seed", type=int, default=0)
    qc.add_argument("--out", default=None)
    qc.add_argument("--format", choices=("csv", "json"), default=None)

    ls = sub.add_parser("list", help="list registered suites")
    ls.add_argument("--group", default=None, help="only this group (table3, optimal-control, ...)")
    return parser


def _patterns(values) -> list:
    out = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    return out


def _overrides(args) -> dict:
    return {"adam_epochs": args.adam_epochs, "lbfgs_epochs": args.lbfgs_epochs, "adam_lr": args.adam_lr,
            "gamma": args.gamma, "singular_rule": args.singular_rule, "family": args.family}


def _finish(rows: list, args, name: str) -> int:
    path = bench.write_report(rows, _out_path(args.out, name, args.format), args.format)
    failed = [r for r in rows if r.get("stop_reason") == "non-finite"]
    for r in rows:
        mae = "-" if r.get("mae") is None else f"{r['mae']:.3e}"
        j = "" if r.get("j_value") is None else f" J={r['j_value']:.6f}"
        print(f"{r['suite_id']:<14} seed={r['seed']:<3} loss={r['final_loss']:.3e} mae={mae}{j}"
              f"{' *' if r.get('best') and len(rows) > 1 else ''}")
    print(f"report: {path}")
    if failed:
        print(f"non-finite loss in {len(failed)} run(s)", file=sys.stderr)
        return 2
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            for s in suite_registry():
                if args.group is None or s.group == args.group:
                    print(f"{s.id:<14} {s.kind:<16} {s.group:<16} {s.title}")
            return 0
        if args.command == "quad-compare":
            rows = bench.quad_compare(args.function, args.a, args.b, args.n_values, args.seed)
            path = bench.write_report(rows, _out_path(args.out, "quad_compare", args.format), args.format)
            for r in rows:
                print(f"n={r['n']:<4} gauss={r['gauss_error']:.3e} trapezoid={r['trapezoid_error']:.3e} "
                      f"mc={r['mc_error']:.3e}")
            print(f"report: {path}")
            return 0
        if args.command == "run":
            seeds = [args.seed] if args.seeds is None else list(range(42, 42 + args.seeds))
            rows = bench.run_suites(_patterns(args.suite), seeds, args.workers, n_train=args.n_train,
                                    hidden=args.hidden, lr=args.lr, **_overrides(args))
            return _finish(rows, args, "run")
        if args.command == "sweep":
            rows = bench.sweep(_patterns(args.suite or ["ex*"]), args.n_values or [None],
                               args.hidden or [None], args.lr_values or [None], args.seed, args.workers,
                               **_overrides(args))
            return _finish(rows, args, "sweep")
    except bench.BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
