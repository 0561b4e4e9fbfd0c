import math

import numpy as np
import pytest

from quadpinn import autodiff as ad
from quadpinn.network import mlp_new
from quadpinn.problems import (
    Condition,
    Const,
    Defaults,
    Delay,
    D,
    Fredholm,
    Known,
    ProblemError,
    ProblemSpec,
    OptimalControlSpec,
    TrainableParameter,
    U,
    Volterra,
    build_loss,
    build_oc_loss,
    build_residual,
    compile_problem,
    exact_providers,
    get_spec,
    mae,
    max_exact_residual,
    register_inverse_parameters,
    simulate_cost,
    suite_ids,
    suite_registry,
)
from quadpinn.problems.registry import POPULATION_TABLE, population_umax


class TestRegistry:
    def test_table_sizes(self):
        ids = suite_ids()
        counts = {p: sum(i.startswith(p) for i in ids) for p in ("t3r", "t4r", "t5r", "t7r", "t8r", "oc-ex")}
        assert counts == {"t3r": 13, "t4r": 10, "t5r": 7, "t7r": 7, "t8r": 5, "oc-ex": 7}
        assert len(ids) == len(set(ids))

    def test_ids_are_stable_order(self):
        assert suite_ids()[:3] == ["t3r1", "t3r2", "t3r3"]
        assert [s.id for s in suite_registry()] == suite_ids()

    def test_abel_row_is_first_kind_with_singular_kernel(self):
        spec = get_spec("t3r11")
        eq = spec.equations[0]
        # kappa = 0: the equation has no bare U term at the top level
        ops = [t for t in _walk(eq) if isinstance(t, Volterra)]
        assert len(ops) == 1 and ops[0].singular_exponent == 0.5
        np.testing.assert_allclose(ops[0].kernel(0.5, 0.25), -2.0)
        assert not any(isinstance(t, U) for t in _walk(eq, stop_at_integrals=True))

    def test_delay_history(self):
        spec = get_spec("oc-ex4")
        delays = [t for t in _walk(spec.constraints[0]) if isinstance(t, Delay)]
        assert len(delays) == 1 and delays[0].tau == 1.0
        np.testing.assert_array_equal(delays[0].history(np.linspace(-1, 0, 5)), 1.0)

    def test_unknown_suite(self):
        with pytest.raises(KeyError):
            get_spec("nosuch")

    def test_population_closed_form(self):
        assert abs(population_umax(0.1) - 0.7697415) < 1e-7
        for kappa, row in POPULATION_TABLE.items():
            assert abs(population_umax(kappa) - row[1]) < 1e-6

    def test_reference_values_recorded(self):
        assert get_spec("t3r1").reference_mae == {"u": 4.45e-5}
        assert get_spec("t8r2").reference_mae == {"u1": 2.04e-5, "u2": 2.28e-5}
        assert get_spec("oc-ex1").reference_j == pytest.approx(0.328259, abs=1e-6)


def _walk(expr, stop_at_integrals=False):
    yield expr
    for attr in ("left", "right", "inner", "integrand"):
        child = getattr(expr, attr, None)
        if child is None:
            continue
        if stop_at_integrals and attr == "integrand":
            continue
        yield from _walk(child, stop_at_integrals)


class TestExactResiduals:
    @pytest.mark.parametrize("sid", [s.id for s in suite_registry()
                                     if s.has_exact and s.kind != "optimal-control" and s.id != "inv-frac"])
    def test_zero_residual_gate(self, sid):
        spec = get_spec(sid)
        assert max_exact_residual(spec) <= spec.tolerance

    def test_t3r1_at_n20(self):
        assert max_exact_residual(get_spec("t3r1"), n_train=20) < 1e-8

    def test_abel_legendre_rule_is_worse(self):
        spec = get_spec("t3r11")
        jacobi = max_exact_residual(spec, n_train=30)
        legendre = max_exact_residual(spec, n_train=30, singular_rule="legendre")
        assert jacobi < 1e-10 < legendre < 1e-1

    def test_inverse_fractional_residual_is_l1_limited(self):
        spec = get_spec("inv-frac")
        coarse = max_exact_residual(spec, n_train=50)
        fine = max_exact_residual(spec, n_train=200)
        assert fine < coarse

    def test_exact_loss_is_tiny(self):
        obj = build_loss(get_spec("t3r1"), "exact", n_train=30)
        assert obj(np.zeros(0)) < 1e-15


class TestResidualExamples:
    def _spec(self, source, kernel, conditions=(), **kw):
        u = U("u")
        return ProblemSpec(id="tmp", title="tmp", domain=((0.0, 1.0),), unknowns=("u",),
                           equations=(u - Known(source) - Fredholm(kernel, u),), conditions=conditions, **kw)

    def test_zero_source_zero_solution(self):
        spec = self._spec(lambda x: 0 * x, lambda x, t: np.sin(x * t) + 3)
        res = build_residual(spec, [lambda X: 0.0 * X[:, 0]], n_train=12)()
        np.testing.assert_array_equal(res[0], 0.0)

    def test_population_zero_solution(self):
        spec = get_spec("pop-k0.3-a1")
        res = build_residual(spec, [lambda X: 0.0 * X[:, 0]], n_train=15)()
        np.testing.assert_array_equal(res[0], 0.0)
        spec = get_spec("pop-k0.3-a0.5")
        res = build_residual(spec, [lambda X: 0.0 * X[:, 0]], n_train=15)()
        np.testing.assert_array_equal(res[0], 0.0)

    def test_condition_violation_adds_its_square(self):
        exact = lambda x: x + ad.exp(x)
        spec = self._spec(lambda x: np.exp(x) + x - 4 / 3, lambda x, t: t + 0 * x,
                          conditions=(Condition("u", 0.0, 1.1, kind="ic"),))
        obj = build_loss(spec, [lambda X: exact(X[:, 0])], n_train=20, lambdas={"ic": 1.0})
        parts = obj.components(np.zeros(0))
        assert parts["residual"] < 1e-28
        np.testing.assert_allclose(parts["loss"], 0.01, rtol=1e-12)

    def test_zero_lambdas_leave_mean_squared_residual(self):
        spec = self._spec(lambda x: np.exp(x), lambda x, t: t + 0 * x,
                          conditions=(Condition("u", 0.0, 5.0, kind="bc"),))
        net = mlp_new([1, 5, 1], seed=1)
        obj = build_loss(spec, [net], n_train=10, lambdas={"ic": 0.0, "bc": 0.0})
        theta = obj.initial()
        res = obj.residuals(theta)[0]
        np.testing.assert_allclose(obj(theta), np.mean(res ** 2), rtol=1e-13)

    def test_zero_parameters_match_forward_mode(self):
        spec = get_spec("t3r1")
        net = mlp_new([1, 10, 10, 1], seed=3)
        assert register_inverse_parameters(spec, 141, 30) == []
        f1, g1 = build_loss(spec, [net], n_train=30).loss_and_grad(net.params)
        f2, g2 = build_loss(spec, [net.copy()], n_train=30).loss_and_grad(net.params)
        assert f1 == f2
        np.testing.assert_array_equal(g1, g2)

    def test_duplicate_parameter_names(self):
        with pytest.raises(ValueError):
            self._spec(lambda x: x, lambda x, t: t + 0 * x,
                       parameters=(TrainableParameter("k"), TrainableParameter("k")))

    def test_condition_outside_domain(self):
        with pytest.raises(ValueError):
            self._spec(lambda x: x, lambda x, t: t + 0 * x, conditions=(Condition("u", 1.5, 0.0),))

    def test_unknown_name_in_equation(self):
        spec = ProblemSpec(id="bad", title="bad", domain=((0.0, 1.0),), unknowns=("u",),
                           equations=(U("v") - Const(1.0),))
        with pytest.raises(ProblemError):
            compile_problem(spec, 5)

    def test_caputo_on_2d_rejected(self):
        from quadpinn.problems import Caputo
        spec = ProblemSpec(id="bad", title="bad", domain=((0.0, 1.0), (0.0, 1.0)), unknowns=("u",),
                           equations=(Caputo("u", 0.5) - Const(1.0),))
        with pytest.raises(ProblemError):
            compile_problem(spec, 4)

    def test_too_few_points(self):
        with pytest.raises(ProblemError):
            compile_problem(get_spec("t3r1"), 1)


class TestLossGradient:
    @pytest.mark.parametrize("sid", ["t3r1", "t4r1", "t5r1", "t8r5", "oc-ex1", "inv-ex5"])
    def test_matches_finite_differences(self, sid):
        spec = get_spec(sid)
        from quadpinn.problems import NetworkSet, Objective
        compiled = compile_problem(spec, 6 if spec.dim > 1 else 10)
        nets = NetworkSet(len(spec.unknowns), spec.dim, (4,), seed=0)
        handles = register_inverse_parameters(spec, nets.n_params, compiled.n_colloc, {"kappa": 0.3}
                                              if spec.parameters else None)
        obj = Objective(compiled, nets, handles)
        theta = obj.initial()
        _, g = obj.loss_and_grad(theta)
        h = 1e-6
        fd = np.array([(obj(theta + h * e) - obj(theta - h * e)) / (2 * h) for e in np.eye(theta.size)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-7)


class TestSystems:
    def test_permutation_symmetry(self):
        spec = get_spec("t8r2")
        swapped = ProblemSpec(id="t8r2-swapped", title=spec.title, domain=spec.domain,
                              unknowns=tuple(reversed(spec.unknowns)),
                              equations=tuple(reversed(spec.equations)), conditions=spec.conditions,
                              exact=spec.exact)
        nets = [mlp_new([1, 6, 1], seed=1), mlp_new([1, 6, 1], seed=2)]
        a = build_loss(spec, nets, n_train=15)
        b = build_loss(swapped, list(reversed(nets)), n_train=15)
        theta_a = np.concatenate([n.params for n in nets])
        theta_b = np.concatenate([n.params for n in reversed(nets)])
        assert abs(a(theta_a) - b(theta_b)) <= 1e-14 * max(1.0, a(theta_a))


class TestOptimalControl:
    def test_example1_exact_cost(self):
        spec = get_spec("oc-ex1")
        obj = build_oc_loss(spec, "exact", n_train=100)
        parts = obj.components(np.zeros(0))
        assert abs(parts["cost"] - 0.328259) < 1e-6
        assert parts["residual"] + parts["conditions"] < 1e-10

    def test_example5_exact_cost(self):
        spec = get_spec("oc-ex5")
        assert abs(simulate_cost(spec, exact_providers(spec)) - 0.380797077) < 1e-6

    def test_zero_cost_consistent_constraint(self):
        spec = OptimalControlSpec(id="z", title="z", domain=((0.0, 1.0),), states=("chi",), controls=("u",),
                                  cost=0.0 * U("u"), constraints=(D("chi") - U("u"),),
                                  conditions=(Condition("chi", 0.0, 0.0, kind="ic"),))
        obj = build_oc_loss(spec, [lambda X: X[:, 0] ** 2, lambda X: 2 * X[:, 0]], n_train=20)
        assert obj(np.zeros(0)) < 1e-28

    def test_gamma_must_be_positive(self):
        spec = get_spec("oc-ex1")
        with pytest.raises(ProblemError):
            build_oc_loss(spec, "exact", n_train=10, gamma=0.0)

    def test_delay_never_leaves_the_domain(self):
        spec = get_spec("oc-ex4")
        queried = []

        def provider(X):
            x = X.data if isinstance(X, ad.Tensor) else X
            queried.append((float(x.min()), float(x.max())))
            return X[:, 0] * 0.5 + 1.0

        build_oc_loss(spec, [provider, lambda X: X[:, 0] * 0.0], n_train=40)(np.zeros(0))
        lo = min(q[0] for q in queried)
        hi = max(q[1] for q in queried)
        assert 0.0 <= lo and hi <= 2.0

    def test_delay_uses_history_exactly(self):
        # chi = 1 + t with zero control: residual = 1 - chi(t-1) = 1 - 1 for t < 1 and 1 - t for t >= 1
        spec = get_spec("oc-ex4")
        res = build_residual(spec, [lambda X: 1.0 + X[:, 0], lambda X: 0.0 * X[:, 0]], n_train=30)()[0]
        t = compile_problem(spec, 30).builder.colloc.points[:, 0]
        np.testing.assert_allclose(res, np.where(t < 1, 0.0, 1.0 - t), atol=1e-14)


class TestMae:
    def test_examples(self):
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert mae([1.0, 2.0], [1.1, 1.9]) == pytest.approx(0.1)
        assert mae(np.arange(5.0), np.arange(5.0) + 0.3) == pytest.approx(0.3)

    def test_errors(self):
        with pytest.raises(ValueError):
            mae([], [])
        with pytest.raises(ValueError):
            mae([1.0], [1.0, 2.0])
