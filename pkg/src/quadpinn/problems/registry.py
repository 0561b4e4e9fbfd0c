"""Named benchmark problems.

IDs: ``t3r1..t3r13`` (1-D integral equations), ``t4r1..t4r10`` (ordinary
integro-differential), ``t5r1..t5r7`` (partial integro-differential),
``t7r1..t7r7`` (2-D and 3-D integral equations), ``t8r1..t8r5`` (systems),
``pop-k<kappa>-a<alpha>`` (Volterra population model), ``oc-ex1..oc-ex7``
(optimal control), ``inv-ex5``, ``inv-ex6``, ``inv-frac`` (inverse problems),
``ex1..ex4`` (hyperparameter study equations) and ``demo``.

Exact solutions are written with :mod:`quadpinn.autodiff` functions so that
they can replace the networks in residual checks; sources and kernels are
plain numpy.  Corrections to printed rows are listed in each spec's
``notes``.
"""

from __future__ import annotations

import dataclasses
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .. import autodiff as ad
from .spec import Condition, DataSet, Defaults, OptimalControlSpec, ProblemSpec, TrainableParameter
from .terms import (Apply, Caputo, Const, D, Delay, Fredholm, Fredholm2D, Fredholm3D, Known, Line,
                    Param, U, Volterra, Volterra2D, caputo_monomial_sum)

__all__ = ["suite_registry", "get_spec", "suite_ids", "POPULATION_TABLE"]

E = math.e
SMOOTH = 1e-6
ABEL = 1e-2
#: Adam warm start followed by L-BFGS; calibrated on seeds 42..46
WARM = Defaults(adam_epochs=1000, adam_lr=1e-2, lbfgs_epochs=500)
WARM_2D = Defaults(n_train=12, adam_epochs=1000, adam_lr=1e-2, lbfgs_epochs=1000)


def _square(v):
    return v * v


def _cube(v):
    return v * v * v


def _first(S, *terms, lhs=None):
    """Residual ``lhs - S - sum(terms)`` (``lhs`` omitted for first-kind equations)."""
    res = Const(0.0) if lhs is None else lhs
    res = res - Known(S)
    for t in terms:
        res = res - t
    return res


def _bcs(exact, points=(0.0, 1.0), name="u", kind="bc"):
    return tuple(Condition(name, p, float(exact(np.array(p))), kind=kind) for p in points)


# ---------------------------------------------------------------------------
# one-dimensional integral equations


def _table3() -> list:
    u = U("u")
    x_plus_exp = lambda x: x + ad.exp(x)  # noqa: E731
    rows = [
        # (kappa, zeta, exact, source, operators, published MAE)
        (1, None, x_plus_exp, lambda x: np.exp(x) + x - 4 / 3,
         [Fredholm(lambda x, t: t, u)], 4.45e-5, "Fredholm"),
        (1, None, x_plus_exp, lambda x: np.exp(x) + x / 2 - 4 / 3 + x * E,
         [Fredholm(lambda x, t: t - x, u)], 1.56e-5, "Fredholm"),
        (1, ad.exp, lambda x: x, lambda x: x * E,
         [Fredholm(lambda x, t: -x + 0 * t, Apply(ad.exp, u))], 1.48e-6, "Fredholm"),
        (1, None, x_plus_exp, lambda x: 2 * np.exp(x) - 1 + x ** 3 / 6,
         [Volterra(lambda x, t: t - x, u)], 2.34e-5, "Volterra"),
        (0, None, ad.sin, lambda x: np.sin(x) - x * np.cos(x),
         [Volterra(lambda x, t: -t + 0 * x, u)], 7.85e-4, "Volterra"),
        (0, _square, ad.exp, lambda x: np.exp(2 * x) - np.exp(x),
         [Volterra(lambda x, t: -np.exp(x - t), u ** 2)], 3.29e-4, "Volterra"),
        (1, None, ad.exp, lambda x: 1 + 0 * x,
         [Volterra(lambda x, t: 1 + 0 * (x + t), u)], 1.11e-5, "Volterra"),
        (1, _square, ad.exp, lambda x: np.exp(x) - (np.exp(2 * x) - 1) / 2,
         [Volterra(lambda x, t: 1 + 0 * (x + t), u ** 2)], 2.30e-5, "Volterra"),
        (1, None, x_plus_exp, lambda x: 2 * np.exp(x) - x / 2 - 7 / 3 + x ** 3 / 6 + x * E,
         [Fredholm(lambda x, t: t - x, u), Volterra(lambda x, t: t - x, u)], 1.95e-5, "Volterra-Fredholm"),
        (1, None, lambda x: x * ad.exp(x), lambda x: np.exp(x) - 1 - x,
         [Fredholm(lambda x, t: x + 0 * t, u), Volterra(lambda x, t: 1 + 0 * (x + t), u)],
         3.41e-5, "Volterra-Fredholm"),
        (0, None, lambda x: x, lambda x: 4 / 3 * x ** 1.5,
         [Volterra(lambda x, t: -1 / np.sqrt(x - t), u, singular_exponent=0.5)], 3.27e-3, "Abel"),
        (0, _cube, lambda x: x, lambda x: 32 / 35 * x ** 3.5,
         [Volterra(lambda x, t: -1 / np.sqrt(x - t), Apply(_cube, u, "cube"), singular_exponent=0.5)],
         1.58e-3, "Abel"),
    ]
    # t3r1 keeps the plain setting; t3r10 trains better without the Adam warm start
    budgets = {1: Defaults(), 10: Defaults(lbfgs_epochs=500)}
    specs = []
    for k, (kappa, _, exact, S, ops, ref, kind) in enumerate(rows, start=1):
        lhs = None if kappa == 0 else kappa * u
        specs.append(ProblemSpec(
            id=f"t3r{k}", title=f"{kind} integral equation, kappa={kappa}",
            domain=((0.0, 1.0),), unknowns=("u",), equations=(_first(S, *ops, lhs=lhs),),
            exact={"u": exact}, tolerance=ABEL if kind == "Abel" else SMOOTH,
            singular_rule="jacobi" if kind == "Abel" else "legendre",
            reference_mae={"u": ref}, group="table3", defaults=budgets.get(k, WARM)))
    specs.append(ProblemSpec(
        id="t3r13", title="Fredholm integral equation on [0, inf)",
        domain=((0.0, math.inf),), unknowns=("u",),
        equations=(_first(lambda x: np.exp(-x),
                          Fredholm(lambda x, t: np.exp(-(x + t)), u, kernel_includes_weight=True),
                          lhs=u),),
        exact={"u": lambda x: 2 * ad.exp(-x)}, family="laguerre", mae_domain=((0.0, 5.0),),
        reference_mae={"u": 3.71e-5}, group="table3", defaults=Defaults(lbfgs_epochs=500),
        notes="Gauss-Laguerre collocation; kernel contains the e^-t weight; MAE grid [0, 5]"))
    return specs


def _table4() -> list:
    u, du = U("u"), D("u")
    one = lambda x, t: 1 + 0 * (x + t)  # noqa: E731
    xmt = lambda x, t: x - t  # noqa: E731
    rows = [
        # (kappa, v, exact, source, operators, published MAE, kind, note)
        (1, 2, ad.exp, lambda x: 1 - E + np.exp(x), [Fredholm(one, u)], 2.74e-7, "Fredholm", ""),
        (1, 1, ad.sin, lambda x: np.cos(x) - 1 + math.cos(1.0), [Fredholm(one, u)], 1.03e-6, "Fredholm",
         "printed v=2 is inconsistent with the source; v=1 used"),
        (1, 2, lambda x: ad.exp(x) + x, lambda x: 0.5 - E + np.exp(x), [Fredholm(one, u)], 3.19e-6,
         "Fredholm", ""),
        (1, 1, lambda x: x, lambda x: 5 / 4 - x ** 2 / 3, [Fredholm(lambda x, t: x ** 2 - t, u ** 2)],
         2.05e-7, "Fredholm", ""),
        (0, 0, lambda x: ad.cosh(x) + x, lambda x: np.exp(x) + x ** 2 / 2 - 1,
         [Volterra(lambda x, t: -(x - t + 1), du)], 4.65e-5, "Volterra", "zeta acts on u'"),
        (0, 0, ad.sin, lambda x: 7 / 8 + x ** 2 / 4 - np.cos(x) + np.cos(2 * x) / 8,
         [Volterra(lambda x, t: -(x - t), u ** 2 + du)], 1.11e-4, "Volterra", "zeta acts on u^2 + u'"),
        (1, 2, ad.exp, lambda x: 1 + x, [Volterra(xmt, u)], 2.15e-7, "Volterra", ""),
        (1, 1, lambda x: 1 + ad.exp(-x),
         lambda x: 9 / 4 - 5 * x / 2 - x ** 2 / 2 - 3 * np.exp(-x) - np.exp(-2 * x) / 4,
         [Volterra(xmt, u ** 2)], 3.48e-6, "Volterra", ""),
        (1, 1, lambda x: 2 + 6 * x, lambda x: 9 - 5 * x - x ** 2 - x ** 3,
         [Fredholm(xmt, u), Volterra(xmt, u)], 3.67e-5, "Volterra-Fredholm", ""),
        (1, 1, lambda x: x * ad.exp(x), lambda x: 2 * np.exp(x) - 2,
         [Fredholm(one, u), Volterra(one, u)], 6.82e-6, "Volterra-Fredholm", ""),
    ]
    specs = []
    for k, (kappa, v, exact, S, ops, ref, kind, note) in enumerate(rows, start=1):
        lhs = None if kappa == 0 else kappa * (u if v == 0 else D("u", v))
        specs.append(ProblemSpec(
            id=f"t4r{k}", title=f"{kind} integro-differential equation, order {v}",
            domain=((0.0, 1.0),), unknowns=("u",), equations=(_first(S, *ops, lhs=lhs),),
            conditions=_bcs(exact), exact={"u": exact}, reference_mae={"u": ref},
            group="table4", defaults=WARM, notes=note))
    return specs


def _table5() -> list:
    u = U("u")
    ut = D("u", 1, axis=1)
    exact = lambda x, t: ad.sin(x * t)  # noqa: E731
    base = lambda x, t: x * np.cos(t * x)  # noqa: E731
    upto_x = lambda pts: pts[:, 0]  # noqa: E731
    rows = [
        (exact, lambda x, t: base(x, t) + (np.cos(x) - 1) / x,
         Line(lambda x, t, s: 1 + 0 * (x + t + s), u, axis=1), 3.07e-4, "Fredholm"),
        (exact, lambda x, t: base(x, t) - x + x * np.cos(x),
         Line(lambda x, t, s: x ** 2 + 0 * s, u, axis=1), 5.05e-5, "Fredholm"),
        (exact, lambda x, t: base(x, t) - x * np.sin(t) + x * np.sin(t) * np.cos(x),
         Line(lambda x, t, s: x ** 2 * np.sin(t) + 0 * s, u, axis=1), 3.84e-5, "Fredholm"),
        (exact, lambda x, t: base(x, t) + t * (x * np.cos(x) - np.sin(x)) / x,
         Line(lambda x, t, s: x * t * s, u, axis=1), 5.03e-5, "Fredholm"),
        (exact, lambda x, t: base(x, t) + (np.cos(x) * np.sin(x) - x) / (2 * x),
         Line(lambda x, t, s: 1 + 0 * (x + t + s), u ** 2, axis=1), 6.46e-5, "Fredholm"),
        (exact, lambda x, t: base(x, t) + (np.cos(x ** 2) - 1) / x,
         Line(lambda x, t, s: 1 + 0 * (x + t + s), u, axis=1, g=0.0, h=upto_x), 1.04e-4, "Volterra"),
        (lambda x, t: ad.exp(x - t), lambda x, t: -np.exp(x - t) + 1 - np.exp(x),
         Line(lambda x, t, s: 1 + 0 * (x + t + s), u, axis=1, g=0.0, h=upto_x), 6.39e-6, "Volterra"),
    ]
    ic_x = np.linspace(0.0, 1.0, 11)
    specs = []
    for k, (ex, S, op, ref, kind) in enumerate(rows, start=1):
        ic = Condition("u", np.column_stack([ic_x, np.zeros_like(ic_x)]),
                       lambda x, t, ex=ex: ex(x, t), kind="ic")
        specs.append(ProblemSpec(
            id=f"t5r{k}", title=f"{kind} partial integro-differential equation",
            domain=((0.0, 1.0), (0.0, 1.0)), unknowns=("u",), equations=(_first(S, op, lhs=ut),),
            conditions=(ic,), exact={"u": ex}, reference_mae={"u": ref}, group="table5",
            defaults=WARM_2D))
    return specs


T7R2_OPERATOR = 0.40273597526733745


def _table7() -> list:
    u = U("u")
    specs = [ProblemSpec(
        id="t7r1", title="2-D Fredholm integral equation",
        domain=((0.0, 1.0), (0.0, 2.0)), unknowns=("u",),
        equations=(_first(lambda x, y: x ** 2 * y + 4 / 9 * x,
                          Fredholm2D(lambda x, y, s, t: -0.5 * x * t + 0 * (y + s), u), lhs=u),),
        exact={"u": lambda x, y: x * x * y}, reference_mae={"u": 2.25e-4}, group="table7",
        defaults=WARM_2D)]
    specs.append(ProblemSpec(
        id="t7r2", title="3-D Fredholm integral equation",
        domain=((0.0, 1.0), (-1.0, 1.0), (1.0, 2.0)), unknowns=("u",),
        equations=(_first(lambda x, y, z: x ** 2 * y * np.exp(x) + 0 * z - T7R2_OPERATOR,
                          Fredholm3D(lambda x, y, z, r, s, t: np.exp(s * r) + 0 * (x + y + z + t), u),
                          lhs=u),),
        exact={"u": lambda x, y, z: x * x * y * ad.exp(x) + 0 * z}, reference_mae={"u": 1.11e-3},
        group="table7", defaults=Defaults(n_train=6, adam_epochs=1000, adam_lr=1e-2, lbfgs_epochs=1000),
        notes="printed source constant (e-1)/2 replaced by the operator value 0.40273597526733745"))
    q = lambda x, y: (y * y * x + x * x * y) / 2  # noqa: E731
    rows = [
        (lambda x, y, s, t: np.exp(x + y + s + t),
         lambda x, y: ((x + y - 2) * np.exp(2 * x + 2 * y) + (2 - y) * np.exp(x + 2 * y)
                       + (2 - x) * np.exp(2 * x + y) + x + y - 2 * np.exp(x + y)), 1.39e-3),
        (lambda x, y, s, t: np.exp(x + y) + 0 * (s + t), lambda x, y: x + y + np.exp(x + y) * q(x, y), 3.91e-4),
        (lambda x, y, s, t: np.exp(y) + 0 * (x + s + t), lambda x, y: x + y + np.exp(y) * q(x, y), 3.62e-4),
        (lambda x, y, s, t: np.exp(x) + 0 * (y + s + t), lambda x, y: x + y + np.exp(x) * q(x, y), 1.99e-4),
        (lambda x, y, s, t: 1 + 0 * (x + y + s + t), lambda x, y: x + y + q(x, y), 5.78e-5),
    ]
    for k, (K, S, ref) in enumerate(rows, start=3):
        specs.append(ProblemSpec(
            id=f"t7r{k}", title="2-D Volterra integral equation",
            domain=((0.0, 1.0), (0.0, 2.0)), unknowns=("u",),
            equations=(u + Volterra2D(K, u) - Known(S),),
            exact={"u": lambda x, y: x + y}, reference_mae={"u": ref}, group="table7",
            defaults=WARM_2D,
            notes="sources match u + I = S; the integral enters with coefficient -1"))
    return specs


def _table8() -> list:
    u1, u2 = U("u1"), U("u2")
    specs = []
    half_pi = math.pi / 2

    def system(k, domain, kappa, v, exact, sources, kernels, op, ref, conditions, note=""):
        eqs = []
        for i, name in enumerate(("u1", "u2")):
            lhs = None if kappa == 0 else kappa * (U(name) if v == 0 else D(name, v))
            ops = [op(kernels[i][0], u1), op(kernels[i][1], u2)]
            eqs.append(_first(sources[i], *ops, lhs=lhs))
        specs.append(ProblemSpec(
            id=f"t8r{k}", title=f"system of {op.__name__} equations, kappa={kappa}, order {v}",
            domain=(domain,), unknowns=("u1", "u2"), equations=tuple(eqs), conditions=conditions,
            exact={"u1": exact[0], "u2": exact[1]}, reference_mae={"u1": ref[0], "u2": ref[1]},
            group="table8", defaults=dataclasses.replace(WARM, lbfgs_epochs=1000), notes=note))

    def ends(exact, a, b, kind="bc"):
        out = []
        for name, fn in zip(("u1", "u2"), exact):
            for p in (a, b):
                out.append(Condition(name, p, float(fn(np.array(p))), kind=kind))
        return tuple(out)

    ex1 = (lambda x: ad.sin(x) + ad.cos(x), lambda x: ad.sin(x) - ad.cos(x))
    system(1, (0.0, math.pi), 1, 0, ex1,
           (lambda x: np.sin(x) + np.cos(x) - 4 * x, lambda x: np.sin(x) - np.cos(x)),
           ((lambda x, t: x + 0 * t, lambda x, t: x + 0 * t),
            (lambda x, t: 1 + 0 * (x + t), lambda x, t: -1 + 0 * (x + t))),
           Fredholm, (1.30e-3, 2.74e-4), (), "K22 = -1 (printed 1 is inconsistent)")
    ex2 = (lambda x: x, lambda x: x * x)
    system(2, (0.0, 1.0), 1, 0, ex2,
           (lambda x: x - x ** 4 / 6, lambda x: x ** 2 - x ** 5 / 12),
           ((lambda x, t: (x - t) ** 2, lambda x, t: x - t),
            (lambda x, t: (x - t) ** 3, lambda x, t: (x - t) ** 2)),
           Volterra, (2.04e-5, 2.28e-5), ())
    ex3 = (lambda x: 1 + x, lambda x: 1 + x * x)
    system(3, (0.0, 1.0), 0, 0, ex3,
           (lambda x: x ** 2 / 2 + x ** 3 / 2 + x ** 4 / 12, lambda x: 1.5 * x ** 2 - x ** 3 / 6 + x ** 4 / 12),
           ((lambda x, t: -(x - t - 1), lambda x, t: -(x - t + 1)),
            (lambda x, t: -(x - t + 1), lambda x, t: -(x - t - 1))),
           Volterra, (1.18e-3, 1.17e-3), ())
    ex4 = (ad.cos, ad.sin)
    system(4, (0.0, half_pi), 1, 2, ex4,
           (lambda x: -np.cos(x) - (2 - half_pi), lambda x: -np.sin(x) + (2 - half_pi)),
           ((lambda x, t: x - t, lambda x, t: t - x),
            (lambda x, t: x + t, lambda x, t: -(x + t))),
           Fredholm, (3.69e-5, 8.72e-5), ends(ex4, 0.0, half_pi),
           "K12 = t - x and K22 = -(x + t) (printed signs are inconsistent)")
    ex5 = (lambda x: 1 + x + x * x, lambda x: 1 - x - x * x)
    system(5, (0.0, 1.0), 1, 1, ex5,
           (lambda x: 1 + x - x ** 2 / 2 + x ** 3 / 3, lambda x: -1 - 3 * x - 1.5 * x ** 2 - x ** 3 / 3),
           ((lambda x, t: x - t, lambda x, t: x - t + 1),
            (lambda x, t: x - t + 1, lambda x, t: x - t)),
           Volterra, (1.26e-6, 3.39e-6),
           tuple(Condition(n, 0.0, 1.0, kind="ic") for n in ("u1", "u2")))
    return specs


# ---------------------------------------------------------------------------
# Volterra population model

#: kappa -> (x_max alpha=1, u_max alpha=1 closed form, x_max alpha=0.5, u_max alpha=0.5)
POPULATION_TABLE = {
    0.1: (0.4745475, 0.7697415, 0.1505151, 0.7588339),
    0.2: (0.8210821, 0.6590503, 0.3030303, 0.6357327),
    0.3: (1.1191119, 0.5841117, 0.4845485, 0.5483513),
    0.4: (1.3846385, 0.5285380, 0.6625663, 0.4766903),
    0.5: (1.6246625, 0.4851903, 0.8500850, 0.4233432),
    0.6: (1.8466847, 0.4502255, 1.0031004, 0.3807877),
    0.7: (2.0507052, 0.4213250, 1.1596160, 0.3481358),
}
POPULATION_U0 = 0.1


def population_umax(kappa: float, u0: float = POPULATION_U0) -> float:
    """Closed-form maximum of the alpha = 1 population model."""
    return 1.0 + kappa * math.log(kappa / (1.0 + kappa - u0))


def _population_report(domain, umax_ref, xmax_ref):
    def report(predict):
        x = np.linspace(domain[0], domain[1], 2000)
        values = predict(x[:, None])[:, 0]
        i = int(np.argmax(values))
        return {"u_max": float(values[i]), "x_max": float(x[i]),
                "u_max_ref": umax_ref, "x_max_ref": xmax_ref}
    return report


def _population() -> list:
    u = U("u")
    specs = []
    for kappa, (xm1, um1, xm05, um05) in POPULATION_TABLE.items():
        for alpha, xmax, umax in ((1.0, xm1, um1), (0.5, xm05, um05)):
            dom = (0.0, xmax + 1.0)
            deriv = D("u") if alpha == 1.0 else Caputo("u", alpha)
            eq = kappa * deriv - u + u ** 2 + u * Volterra(lambda x, t: 1 + 0 * (x + t), u)
            specs.append(ProblemSpec(
                id=f"pop-k{kappa:g}-a{alpha:g}", title=f"Volterra population model, kappa={kappa:g}, alpha={alpha:g}",
                domain=(dom,), unknowns=("u",), equations=(eq,),
                conditions=(Condition("u", 0.0, POPULATION_U0, kind="ic"),),
                group="population", report=_population_report(dom, umax, xmax),
                defaults=Defaults(n_train=40, hidden=(20, 20), adam_epochs=1000, adam_lr=1e-2, lbfgs_epochs=400),
                notes="kappa D^alpha u = u - u^2 - u * int_0^x u; the printed '+' sign on the integral "
                      "admits no interior maximum and contradicts the closed-form u_max, so the "
                      "TeBeest sign is used; domain [0, x_max + 1]; u_max and x_max by argmax over 2000 points"))
    return specs


# ---------------------------------------------------------------------------
# optimal control


def _optimal_control() -> list:
    chi, u = U("chi"), U("u")
    specs = []
    c1 = E / (2 * E * E - 2)
    specs.append(OptimalControlSpec(
        id="oc-ex1", title="linear-quadratic control, two-point boundary",
        domain=((0.0, 1.0),), states=("chi",), controls=("u",),
        cost=u ** 2 + chi ** 2, constraints=(u - D("chi"),),
        conditions=(Condition("chi", 0.0, 0.0, kind="ic"), Condition("chi", 1.0, 0.5, kind="bc")),
        gamma=1e3, reference_j=0.32825882,
        exact={"u": lambda t: c1 * (ad.exp(t) + ad.exp(-t)), "chi": lambda t: c1 * (ad.exp(t) - ad.exp(-t))},
        reference_mae={"u": 5.35e-3, "chi": 7.12e-4},
        defaults=Defaults(n_train=100, lbfgs_epochs=300)))

    r2 = math.sqrt(2.0)
    k2 = (2 * r2 - 3) / (-math.exp(2 * r2) + 2 * r2 - 3)
    specs.append(OptimalControlSpec(
        id="oc-ex2", title="linear-quadratic control, initial value",
        domain=((0.0, 1.0),), states=("chi",), controls=("u",),
        cost=0.5 * (u ** 2 + chi ** 2), constraints=(D("chi") - u + chi,),
        conditions=(Condition("chi", 0.0, 1.0, kind="ic"),), gamma=1e3, reference_j=0.192909,
        exact={"chi": lambda t: k2 * ad.exp(r2 * t) + (1 - k2) * ad.exp(-r2 * t),
               "u": lambda t: k2 * (r2 + 1) * ad.exp(r2 * t) - (1 - k2) * (r2 - 1) * ad.exp(-r2 * t)},
        reference_mae={"u": 4.59e-3, "chi": 6.22e-4},
        defaults=Defaults(n_train=100, lbfgs_epochs=300),
        notes="constraint chi' = u - chi (the printed u = chi' + t does not hold for the stated optimum)"))

    c3 = 3 * math.sqrt(math.pi) / 4
    x1, x2 = U("chi1"), U("chi2")
    specs.append(OptimalControlSpec(
        id="oc-ex3", title="fractional-order control",
        domain=((0.0, 1.0),), states=("chi1", "chi2"), controls=("u",),
        cost=((x1 - Known(lambda t: 1 + t ** 1.5)) ** 2 + (x2 - Known(lambda t: t ** 2.5)) ** 2
              + (u - Known(lambda t: c3 * t - t ** 2.5)) ** 2),
        constraints=(Caputo("chi1", 0.5) - x2 - u,
                     Caputo("chi2", 0.5) - x1
                     - Known(lambda t: 15 * math.sqrt(math.pi) / 16 * t ** 2 - t ** 1.5 - 1)),
        conditions=(Condition("chi1", 0.0, 1.0, kind="ic"), Condition("chi2", 0.0, 0.0, kind="ic")),
        gamma=10.0, reference_j=0.0,
        exact={"chi1": lambda t: 1 + t ** 1.5, "chi2": lambda t: t ** 2.5, "u": lambda t: c3 * t - t ** 2.5},
        reference_mae={"u": 8.63e-4, "chi1": 2.46e-4, "chi2": 1.13e-4},
        defaults=Defaults(n_train=200, lbfgs_epochs=300)))

    specs.append(OptimalControlSpec(
        id="oc-ex4", title="delay-constrained control",
        domain=((0.0, 2.0),), states=("chi",), controls=("u",),
        cost=0.5 * (u ** 2 + chi ** 2),
        constraints=(D("chi") - u - Delay("chi", 1.0, lambda t: np.ones_like(t)),),
        conditions=(Condition("chi", 0.0, 1.0, kind="ic"),), gamma=750.0, reference_j=1.647874,
        reference_note="numerical value from the literature; soft target",
        defaults=Defaults(n_train=200, lbfgs_epochs=300),
        notes="history chi(t) = 1 on [-1, 0]"))

    specs.append(OptimalControlSpec(
        id="oc-ex5", title="control with cross term",
        domain=((0.0, 1.0),), states=("chi",), controls=("u",),
        cost=0.5 * (u ** 2 + 1.25 * chi ** 2 + chi * u), constraints=(D("chi") - 0.5 * chi - u,),
        conditions=(Condition("chi", 0.0, 1.0, kind="ic"),), gamma=1e4, reference_j=0.380797077,
        exact={"u": lambda t: -(ad.tanh(1 - t) + 0.5) * ad.cosh(1 - t) / math.cosh(1.0),
               "chi": lambda t: ad.cosh(1 - t) / math.cosh(1.0)},
        reference_mae={"u": 7.43e-3, "chi": 7.53e-4},
        defaults=Defaults(n_train=100, lbfgs_epochs=300)))

    specs.append(OptimalControlSpec(
        id="oc-ex6", title="integro-differential constrained control",
        domain=((0.0, 1.0),), states=("chi",), controls=("u",),
        cost=(chi - Known(lambda t: np.exp(t * t))) ** 2 + (u - Known(lambda t: 2 * t + 1)) ** 2,
        constraints=(D("chi") - u + chi - Volterra(lambda t, s: t * (2 * t + 1) * np.exp(s * (t - s)), chi),),
        conditions=(Condition("chi", 0.0, 1.0, kind="ic"),), gamma=1e3, reference_j=0.0,
        exact={"chi": lambda t: ad.exp(t * t), "u": lambda t: 2 * t + 1},
        reference_mae={"u": 6.14e-3, "chi": 6.58e-4},
        defaults=Defaults(n_train=100, lbfgs_epochs=300)))

    sin, cos = np.sin, np.cos
    edge = np.linspace(0.0, 1.0, 21)
    zeros = np.zeros_like(edge)
    specs.append(OptimalControlSpec(
        id="oc-ex7", title="2-D parabolic control",
        domain=((0.0, 1.0), (0.0, 1.0)), states=("chi",), controls=("u",),
        cost=((chi - Known(lambda s, t: t ** 4 * sin(s))) ** 2 + (u - Known(lambda s, t: t ** 3 * cos(s))) ** 2),
        constraints=(D("chi", 1, axis=1) - Apply(ad.cos, chi, "cos")
                     - Known(lambda s, t: 2 * sin(s)) * D("chi", 1, axis=0) - D("chi", 2, axis=0)
                     - Known(lambda s, t: 6 * sin(s)) * u
                     + Known(lambda s, t: cos(t ** 4 * sin(s))
                             + t ** 3 * (t * sin(2 * s) - t * sin(s) + 3 * sin(2 * s)) - 4 * sin(s) * t ** 3),),
        conditions=(Condition("chi", np.column_stack([edge, zeros]), 0.0, kind="ic"),
                    Condition("chi", np.column_stack([zeros, edge]), 0.0, kind="bc")),
        gamma=1e3, reference_j=0.0,
        exact={"chi": lambda s, t: t ** 4 * ad.sin(s), "u": lambda s, t: t ** 3 * ad.cos(s)},
        reference_mae={"u": 3.94e-3, "chi": 1.22e-4},
        defaults=Defaults(n_train=12, lbfgs_epochs=300),
        notes="axis 0 is s, axis 1 is t"))
    return specs


# ---------------------------------------------------------------------------
# inverse problems

INV_KAPPA = 0.5


@lru_cache(maxsize=1)
def _frac_polynomial():
    """Coefficients (ascending) of the degree-9 exact solution of the fractional inverse problem."""
    shift = np.array([-2.0, 1.0])
    poly = np.array([-3.0, 2.0])
    for c, k in ((-4 / 3, 3), (4 / 15, 5), (-8 / 315, 7), (1 / 945, 9)):
        poly = P.polyadd(poly, c * P.polypow(shift, k))
    return poly


def _frac_source(x):
    poly = _frac_polynomial()
    dpoly = P.polyder(poly)
    integrand = P.polymul([0.0, 1.0], P.polymul(dpoly, dpoly))
    integral = P.polyval(x, P.polyint(integrand))
    return caputo_monomial_sum(poly, 0.5, x) - integral / (1 + x)


def _inverse() -> list:
    u = U("u")
    xs = np.linspace(0.0, 1.0, 5)
    specs = []
    c5 = 3 * E * E / 8 + 5 / 8  # int_0^1 e^{2t} (t^3 + t) dt
    ex5 = lambda x: x ** 3 + x  # noqa: E731
    specs.append(ProblemSpec(
        id="inv-ex5", title="inverse Fredholm equation, unknown kappa",
        domain=((0.0, 1.0),), unknowns=("u",),
        equations=(u - Known(lambda x: x ** 3 + x - INV_KAPPA * c5)
                   - Param("kappa") * Fredholm(lambda x, t: np.exp(2 * t) + 0 * x, u),),
        data=(DataSet("u", xs[:, None], ex5(xs)),),
        parameters=(TrainableParameter("kappa", 1, 0.0, INV_KAPPA),),
        exact={"u": ex5}, group="inverse", defaults=Defaults(n_train=30, lbfgs_epochs=300)))
    specs.append(ProblemSpec(
        id="inv-ex6", title="inverse Volterra equation, unknown kappa",
        domain=((0.0, 1.0),), unknowns=("u",),
        equations=(u - Known(lambda x: np.cos(x) - INV_KAPPA * (x * x * np.sin(x) + 2 * x * np.cos(x)
                                                              - 2 * np.sin(x)))
                   - Param("kappa") * Volterra(lambda x, t: t * t + 0 * x, u),),
        data=(DataSet("u", xs[:, None], np.cos(xs)),),
        parameters=(TrainableParameter("kappa", 1, 0.0, INV_KAPPA),),
        exact={"u": ad.cos}, group="inverse", defaults=Defaults(n_train=30, lbfgs_epochs=300)))

    rng = np.random.default_rng(2024)
    xd = np.sort(rng.uniform(0.0, 4.0, 50))
    clean = P.polyval(xd, _frac_polynomial())
    noisy = clean + 0.08 * clean.std() * rng.standard_normal(xd.size)
    coeffs = tuple(_frac_polynomial())
    specs.append(ProblemSpec(
        id="inv-frac", title="inverse fractional Volterra equation, unknown kappa(x)",
        domain=((0.0, 4.0),), unknowns=("u",),
        equations=(Caputo("u", 0.5) - Known(_frac_source)
                   - Param("kappa") * Volterra(lambda x, t: t + 0 * x, D("u") ** 2),),
        data=(DataSet("u", xd[:, None], noisy),),
        parameters=(TrainableParameter("kappa", "collocation", 0.0, lambda x: 1 / (1 + x)),),
        exact={"u": lambda x: _poly_ad(coeffs, x)}, group="inverse",
        defaults=Defaults(n_train=100, adam_epochs=1000, adam_lr=1e-2, lbfgs_epochs=300),
        notes="kappa*(x) = 1/(1+x) defines the source; data noise 0.08 x std, seed 2024"))
    return specs


def _poly_ad(coeffs, x):
    out = 0.0 * x + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out


# ---------------------------------------------------------------------------
# hyperparameter-study equations and the package demonstration


def _examples() -> list:
    u = U("u")
    tk = lambda x, t: t + 0 * x  # noqa: E731
    specs = [
        ProblemSpec(id="ex1", title="Fredholm equation (hyperparameter study)", domain=((0.0, 1.0),),
                    unknowns=("u",), equations=(_first(lambda x: np.exp(x) + x - 4 / 3, Fredholm(tk, u), lhs=u),),
                    exact={"u": lambda x: x + ad.exp(x)}, group="study",
                    notes="exact solution x + e^x (e^x alone does not satisfy the equation)"),
        ProblemSpec(id="ex2", title="Fredholm equation on [0, pi] (hyperparameter study)",
                    domain=((0.0, math.pi),), unknowns=("u",),
                    equations=(_first(lambda x: np.sin(2 * x) + math.pi / 2, Fredholm(tk, u), lhs=u),),
                    exact={"u": lambda x: ad.sin(2 * x)}, group="study",
                    notes="upper limit pi; with pi/2 the source is inconsistent with sin(2x)"),
        ProblemSpec(id="ex3", title="Volterra equation (hyperparameter study)", domain=((0.0, 1.0),),
                    unknowns=("u",),
                    equations=(_first(lambda x: x + 2 * np.exp(x) - 1 - x ** 3 / 3 - x * np.exp(x),
                                      Volterra(tk, u), lhs=u),),
                    exact={"u": lambda x: x + ad.exp(x)}, group="study",
                    notes="exact solution x + e^x"),
        ProblemSpec(id="ex4", title="Volterra equation on [0, pi] (hyperparameter study)",
                    domain=((0.0, math.pi),), unknowns=("u",),
                    equations=(_first(lambda x: 0.75 * np.sin(2 * x) + x * np.cos(2 * x) / 2,
                                      Volterra(tk, u), lhs=u),),
                    exact={"u": lambda x: ad.sin(2 * x)}, group="study"),
        ProblemSpec(id="demo", title="Volterra integro-differential equation (package demonstration)",
                    domain=((0.0, 5.0),), unknowns=("u",),
                    equations=(D("u") + u - Volterra(lambda x, t: np.exp(t - x), u),),
                    conditions=(Condition("u", 0.0, 1.0, kind="ic"),),
                    exact={"u": lambda x: ad.exp(-x) * ad.cosh(x)}, group="study",
                    notes="exact solution e^-x cosh x (e^x cosh x does not satisfy the equation)"),
    ]
    return specs


@lru_cache(maxsize=1)
def _registry() -> tuple:
    specs = (_table3() + _table4() + _table5() + _table7() + _table8() + _population()
             + _optimal_control() + _inverse() + _examples())
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise RuntimeError("duplicate suite IDs")
    return tuple(specs)


def suite_registry() -> list:
    """All registered specs, in a stable order."""
    return list(_registry())


def suite_ids() -> list:
    return [s.id for s in _registry()]


def get_spec(suite_id: str):
    for s in _registry():
        if s.id == suite_id:
            return s
    raise KeyError(suite_id)
