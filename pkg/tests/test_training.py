"""Behavioural checks that need a short training run."""

import numpy as np
import pytest

from quadpinn.optimize import Schedule, train
from quadpinn.problems import compile_problem, get_spec, register_inverse_parameters, solve
from quadpinn.problems.build import NetworkSet, Objective

pytestmark = pytest.mark.training


def objective_for(spec, n_train, seed=42, gamma=None):
    compiled = compile_problem(spec, n_train)
    nets = NetworkSet(len(spec.unknowns), spec.dim, spec.defaults.hidden, seed)
    handles = register_inverse_parameters(spec, nets.n_params, compiled.n_colloc)
    return Objective(compiled, nets, handles, gamma=gamma)


class TestTradeOff:
    def test_constraint_residual_shrinks_with_gamma(self):
        spec = get_spec("oc-ex4")
        residuals = []
        for gamma in (10.0, 1e2, 1e3, 1e4):
            report = solve(spec, gamma=gamma, seed=42)
            obj = objective_for(spec, report.n_train, gamma=gamma)
            residuals.append(obj.components(report.params)["residual"])
        non_increasing = sum(b <= a for a, b in zip(residuals[:-1], residuals[1:]))
        # one inversion is tolerated for optimizer noise
        assert non_increasing >= 2, residuals

    def test_cost_grows_as_constraints_tighten(self):
        spec = get_spec("oc-ex4")
        loose = solve(spec, gamma=10.0, seed=42).j_value
        tight = solve(spec, gamma=1e4, seed=42).j_value
        assert loose < tight


class TestFractionalInverse:
    def test_terms_fall_over_adam_phase(self):
        spec = get_spec("inv-frac")
        d = spec.defaults
        obj = objective_for(spec, d.n_train)
        quarter = d.adam_epochs // 4
        snapshots = {0: obj.initial()}

        def keep(phase, epoch, loss, params):
            if epoch % quarter == 0:
                snapshots[epoch] = params.copy()

        train(obj.loss_and_grad, obj.initial(), Schedule(adam_epochs=d.adam_epochs, adam_lr=d.adam_lr,
                                                         lbfgs_epochs=0), keep)
        assert sorted(snapshots) == [0, quarter, 2 * quarter, 3 * quarter, 4 * quarter]
        parts = [obj.components(snapshots[e]) for e in sorted(snapshots)]
        for key in ("residual", "data"):
            values = [p[key] for p in parts]
            assert all(b < a for a, b in zip(values[:-1], values[1:])), (key, values)

    def test_kappa_vector_starts_at_zero(self):
        spec = get_spec("inv-frac")
        obj = objective_for(spec, 20)
        (handle,) = obj.handles
        np.testing.assert_array_equal(obj.initial()[handle.index], 0.0)
