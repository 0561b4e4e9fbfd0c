import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadpinn import autodiff as ad
from quadpinn.fractional import (
    FractionalError,
    apply_caputo,
    caputo_higher,
    caputo_matrix,
    l1_weights,
    split_order,
)

import oracles


def empirical_orders(alpha, m=2, steps=(16, 32, 64, 128, 256)):
    errors = []
    for k in steps:
        grid = np.linspace(0.0, 1.0, k + 1)
        approx = apply_caputo(caputo_matrix(grid, alpha), grid ** m)
        exact = np.array([oracles.caputo_monomial(m, alpha, x) for x in grid])
        errors.append(np.max(np.abs(approx - exact)))
    errors = np.array(errors)
    return errors, np.log2(errors[:-1] / errors[1:])


class TestOracle:
    def test_caputo_monomial_values(self):
        np.testing.assert_allclose(oracles.caputo_monomial(1, 0.5, 1.0), 2 / math.sqrt(math.pi), rtol=1e-15)
        np.testing.assert_allclose(oracles.caputo_monomial(2, 0.5, 1.0), 8 / (3 * math.sqrt(math.pi)), rtol=1e-15)
        assert oracles.caputo_monomial(3, 0.3, 0.0) == 0.0


class TestL1Scheme:
    def test_linear_function_is_exact(self):
        # L1 interpolates linearly, so u = t is reproduced to rounding
        grid = np.linspace(0, 1, 11)
        m = caputo_matrix(grid, 0.5)
        np.testing.assert_allclose(apply_caputo(m, grid)[-1], 2 / math.sqrt(math.pi), rtol=1e-13)

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_convergence_order(self, alpha):
        errors, orders = empirical_orders(alpha)
        assert np.all(orders >= 1.2)
        np.testing.assert_allclose(orders[-1], 2 - alpha, atol=0.05)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    def test_sign_positive_for_increasing_function(self, alpha):
        grid = np.linspace(0, 1, 33)
        assert np.all(apply_caputo(caputo_matrix(grid, alpha), grid ** 2)[1:] > 0)

    def test_matches_naive_loop_on_nonuniform_grid(self):
        rng = np.random.default_rng(0)
        grid = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, 20)]))
        u = np.sin(3 * grid)
        for alpha in (0.2, 0.6):
            np.testing.assert_allclose(apply_caputo(caputo_matrix(grid, alpha), u),
                                       oracles.naive_l1(u, grid, alpha), rtol=1e-12, atol=1e-14)

    def test_weights_match_last_matrix_row(self):
        grid = np.linspace(0, 2, 9)
        np.testing.assert_allclose(l1_weights(grid, 0.4), caputo_matrix(grid, 0.4).M[-1], rtol=1e-14, atol=1e-16)

    def test_rows_annihilate_constants(self):
        m = caputo_matrix(np.linspace(0, 1, 20), 0.7)
        np.testing.assert_allclose(m.M.sum(axis=1), 0.0, atol=1e-13)

    def test_lower_triangular_read_only(self):
        m = caputo_matrix(np.linspace(0, 1, 6), 0.5)
        np.testing.assert_array_equal(np.triu(m.M, 1), 0.0)
        np.testing.assert_array_equal(m.M[0], 0.0)
        with pytest.raises(ValueError):
            m.M[1, 0] = 0.0

    @settings(max_examples=25, deadline=None)
    @given(alpha=st.floats(0.05, 0.95), n=st.integers(2, 40), slope=st.floats(-5, 5))
    def test_linear_exact_property(self, alpha, n, slope):
        grid = np.linspace(0, 1, n + 1)
        exact = slope * np.array([oracles.caputo_monomial(1, alpha, x) for x in grid])
        np.testing.assert_allclose(apply_caputo(caputo_matrix(grid, alpha), slope * grid), exact,
                                   rtol=1e-11, atol=1e-12)

    def test_tensor_input(self):
        grid = np.linspace(0, 1, 5)
        m = caputo_matrix(grid, 0.5)
        u = ad.Tensor(grid.reshape(5, 1) ** 2, requires_grad=True)
        with ad.Tape() as tape:
            total = apply_caputo(m, u).sum()
        np.testing.assert_allclose(tape.gradient(total, u).data.reshape(-1), m.M.sum(axis=0), rtol=1e-14)


class TestErrors:
    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(FractionalError):
            caputo_matrix(np.linspace(0, 1, 5), alpha)

    @pytest.mark.parametrize("grid", [[0.0], [0.0, 0.5, 0.5], [1.0, 0.0], [0.0, np.nan]])
    def test_bad_grids(self, grid):
        with pytest.raises(FractionalError):
            caputo_matrix(grid, 0.5)

    def test_wrong_sample_count(self):
        with pytest.raises(FractionalError):
            apply_caputo(caputo_matrix(np.linspace(0, 1, 5), 0.5), np.ones(4))


class TestHigherOrder:
    def test_split(self):
        v, alpha = split_order(1.5)
        assert v == 1 and alpha == pytest.approx(0.5)
        with pytest.raises(FractionalError):
            split_order(2.0)

    def test_order_one_and_a_half_of_cube(self):
        # D^{1.5} x^3 = D^{0.5} (3 x^2) = 3 * Gamma(3)/Gamma(2.5) x^{1.5}
        grid = np.linspace(0, 1, 257)
        got = caputo_higher(1.5, 3 * grid ** 2, grid)
        exact = 3 * oracles.caputo_monomial(2, 0.5, 1.0)
        assert abs(got[-1] - exact) < 1e-3

    def test_rejects_low_order(self):
        with pytest.raises(FractionalError):
            caputo_higher(0.5, np.zeros(3), np.linspace(0, 1, 3))
