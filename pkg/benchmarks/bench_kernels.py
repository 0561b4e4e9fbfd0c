"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--out kernels.csv]

Each row reports the best-of-``repeat`` wall time per call for both backends
and the speedup.  Results are checked for agreement before timing, so a
wrong fast path fails loudly instead of looking good.
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from quadpinn import _backend
from quadpinn.quadrature import _jacobi_guesses, _laguerre_guesses, _hermite_guesses


def cases():
    for n in (16, 64, 256):
        yield f"legendre roots n={n}", "polish_roots", (0, n, 0.0, 0.0, _jacobi_guesses(n, 0.0, 0.0), 100)
    for n in (16, 64):
        yield f"jacobi(-0.5,0) roots n={n}", "polish_roots", (0, n, -0.5, 0.0, _jacobi_guesses(n, -0.5, 0.0), 100)
        yield f"laguerre roots n={n}", "polish_roots", (1, n, 0.0, 0.0, _laguerre_guesses(n, 0.0), 100)
        yield f"hermite roots n={n}", "polish_roots", (2, n, 0.0, 0.0, _hermite_guesses(n), 100)
    xs = np.linspace(-0.99, 0.99, 2000)
    yield "legendre P_40 at 2000 points", "poly_and_derivative", (0, 40, 0.0, 0.0, xs)
    for m in (64, 256, 1024):
        grid = np.linspace(0.0, 1.0, m + 1)
        yield f"caputo L1 matrix m={m}", "caputo_l1_matrix", (grid, 0.5)


def first_array(out):
    return np.asarray(out[0] if isinstance(out, tuple) else out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--out", default=None, help="optional CSV path")
    args = parser.parse_args(argv)

    names = _backend.available()
    if "cython" not in names:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1
    backends = {name: _backend.load(name) for name in ("cython", "python")}

    rows = []
    for label, fn, fargs in cases():
        outs = {name: getattr(mod, fn)(*fargs) for name, mod in backends.items()}
        a, b = first_array(outs["cython"]), first_array(outs["python"])
        if not np.allclose(a, b, rtol=1e-12, atol=1e-14):
            raise SystemExit(f"{label}: backends disagree (max diff {np.max(np.abs(a - b)):.3e})")
        times = {}
        for name, mod in backends.items():
            f = getattr(mod, fn)
            number = max(1, int(0.05 / max(timeit.timeit(lambda: f(*fargs), number=1), 1e-6)))
            times[name] = min(timeit.repeat(lambda: f(*fargs), number=number, repeat=args.repeat)) / number
        rows.append({"case": label, "cython_s": times["cython"], "python_s": times["python"],
                     "speedup": times["python"] / times["cython"]})
        print(f"{label:<32} cython {times['cython'] * 1e3:9.3f} ms   python {times['python'] * 1e3:9.3f} ms"
              f"   x{rows[-1]['speedup']:.1f}")

    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
