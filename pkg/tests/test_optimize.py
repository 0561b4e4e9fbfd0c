import numpy as np
import pytest

from quadpinn.autodiff import Tape, Tensor
from quadpinn.network import Mlp, forward, param_gradient
from quadpinn.optimize import (
    AdamState,
    LbfgsState,
    NonFiniteLoss,
    Schedule,
    adam_step,
    lbfgs_direction,
    lbfgs_step,
    train,
)


def quadratic(theta):
    return float((theta[0] - 3.0) ** 2), np.array([2.0 * (theta[0] - 3.0)])


def sphere(theta):
    return float(theta @ theta), 2.0 * theta


def rosenbrock(theta):
    x, y = theta
    f = (1 - x) ** 2 + 100 * (y - x * x) ** 2
    g = np.array([-2 * (1 - x) - 400 * x * (y - x * x), 200 * (y - x * x)])
    return float(f), g


def run_lbfgs(fn, x0, steps, lr=1.0):
    state = LbfgsState(lr=lr)
    x = np.array(x0, dtype=float)
    for _ in range(steps):
        res = lbfgs_step(state, x, fn)
        x = res.params
    return x, state


class TestLbfgs:
    def test_one_dimensional_quadratic(self):
        x, _ = run_lbfgs(quadratic, [0.0], 5)
        assert abs(x[0] - 3.0) < 1e-8

    def test_sphere_ten_dims(self):
        x0 = np.random.default_rng(0).normal(size=10)
        x, _ = run_lbfgs(sphere, x0, 10)
        assert np.max(np.abs(x)) < 1e-10

    def test_rosenbrock(self):
        x, _ = run_lbfgs(rosenbrock, [-1.2, 1.0], 200)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-6)

    def test_accepted_steps_never_increase_loss(self):
        state = LbfgsState()
        x = np.array([-1.2, 1.0])
        f = rosenbrock(x)[0]
        for _ in range(60):
            res = lbfgs_step(state, x, rosenbrock)
            assert res.loss <= f
            x, f = res.params, res.loss

    def test_history_is_bounded(self):
        state = LbfgsState(m=3)
        x = np.random.default_rng(1).normal(size=6)
        fn = lambda v: (float(np.sum(np.arange(1, 7) * v ** 4)), 4 * np.arange(1, 7) * v ** 3)
        for _ in range(20):
            x = lbfgs_step(state, x, fn).params
            assert len(state.s_hist) <= 3

    def test_empty_history_gives_steepest_descent(self):
        g = np.array([1.0, -2.0])
        np.testing.assert_array_equal(lbfgs_direction(LbfgsState(), g), -g)

    def test_curvature_guard(self):
        state = LbfgsState()
        assert not state.push(np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        assert state.push(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert len(state.s_hist) == 1

    def test_failed_line_search_returns_unchanged(self):
        # the gradient points uphill, so no trial satisfies Armijo
        fn = lambda v: (float(v @ v), -2.0 * v)
        state = LbfgsState()
        res = lbfgs_step(state, np.array([1.0]), fn)
        assert not res.accepted and res.params[0] == 1.0

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteLoss):
            lbfgs_step(LbfgsState(), np.array([1.0]), lambda v: (np.nan, np.zeros(1)))


class TestAdam:
    def test_zero_gradient_no_move(self):
        x = np.array([1.0, -2.0])
        np.testing.assert_array_equal(adam_step(AdamState(), x, np.zeros(2)), x)

    def test_first_step_size(self):
        x = adam_step(AdamState(lr=0.1), np.array([0.0]), np.array([1.0]))
        np.testing.assert_allclose(x, [-0.1 / (1 + 1e-8)], rtol=1e-15)

    def test_converges_on_parabola(self):
        state = AdamState(lr=0.05)
        x = np.array([1.0])
        for _ in range(500):
            x = adam_step(state, x, 2 * x)
        assert abs(x[0]) < 1e-2

    def test_non_finite_gradient(self):
        with pytest.raises(NonFiniteLoss):
            adam_step(AdamState(), np.zeros(1), np.array([np.inf]))


def affine_fit():
    net = Mlp((1, 1), params=np.array([0.3, -0.2]))
    X = np.linspace(-1, 1, 9).reshape(-1, 1)
    y = 2 * X + 1

    def loss_and_grad(theta):
        t = Tensor(theta, requires_grad=True)
        with Tape() as tape:
            r = forward(net, X, t) - y
            loss = (r * r).mean()
        return float(loss.data), param_gradient(tape, loss, t)

    return loss_and_grad, net.params


class TestTrain:
    def test_affine_least_squares(self):
        fn, theta0 = affine_fit()
        report = train(fn, theta0, Schedule(lbfgs_epochs=50))
        assert report.final_loss < 1e-12
        np.testing.assert_allclose(report.params, [2.0, 1.0], atol=1e-6)

    def test_zero_epochs_echo_initial_loss(self):
        fn, theta0 = affine_fit()
        report = train(fn, theta0, Schedule(adam_epochs=0, lbfgs_epochs=0))
        assert report.losses == [fn(theta0)[0]] and report.final_loss == fn(theta0)[0]

    def test_adam_then_lbfgs(self):
        fn, theta0 = affine_fit()
        seen = []
        report = train(fn, theta0, Schedule(adam_epochs=20, adam_lr=0.01, lbfgs_epochs=30),
                       callback=lambda phase, epoch, loss, params: seen.append(phase))
        assert report.adam_epochs_run == 20 and seen[:20] == ["adam"] * 20
        assert report.final_loss < 1e-12

    def test_deterministic(self):
        fn, theta0 = affine_fit()
        a = train(fn, theta0, Schedule(adam_epochs=5, lbfgs_epochs=10))
        b = train(fn, theta0, Schedule(adam_epochs=5, lbfgs_epochs=10))
        assert a.losses == b.losses
        np.testing.assert_array_equal(a.params, b.params)

    def test_early_stop_on_tolerance(self):
        report = train(sphere, np.array([1.0, 1.0]), Schedule(lbfgs_epochs=100, lbfgs_lr=1.0))
        assert report.stop_reason == "tolerance" and report.lbfgs_epochs_run < 100

    def test_negative_epochs(self):
        with pytest.raises(ValueError):
            Schedule(adam_epochs=-1)

    def test_non_finite_initial_loss(self):
        with pytest.raises(NonFiniteLoss):
            train(lambda v: (np.inf, v), np.zeros(1))
