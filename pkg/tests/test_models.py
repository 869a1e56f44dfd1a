"""Observation-model contracts: link maps, likelihoods, gradients, steps."""

import math

import numpy as np
import pytest

from countshrink import (
    DataError,
    Model,
    link_forward,
    link_inverse,
    nll,
    nll_grad,
    step_size,
)


def naive_nll(model, y, z):
    """Literal double-loop evaluation of the likelihood formulas."""
    m, k = y.shape
    if model == "poisson":
        total = 0.0
        for i in range(m):
            for j in range(k):
                total += math.exp(z[i, j]) - y[i, j] * z[i, j]
        return total
    total = 0.0
    for i in range(m):
        n_i = y[i].sum()
        for j in range(k):
            total -= (y[i, j] / n_i) * z[i, j]
        total += math.log(sum(math.exp(v) for v in z[i]))
    return total


class TestLinkForward:
    def test_poisson_zero_latent_gives_unit_intensity(self):
        z = np.zeros((2, 3))
        assert np.array_equal(link_forward("poisson", z), np.ones((2, 3)))

    def test_multinomial_zero_row_gives_uniform(self):
        z = np.zeros((1, 4))
        np.testing.assert_allclose(link_forward("multinomial", z), np.full((1, 4), 0.25))

    def test_multinomial_log2_row(self):
        z = np.array([[math.log(2.0), 0.0, 0.0]])
        np.testing.assert_allclose(
            link_forward("multinomial", z), [[0.5, 0.25, 0.25]], atol=1e-14
        )

    def test_rows_sum_to_one_randomized(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            z = rng.normal(scale=5.0, size=(3, 4))
            p = link_forward("multinomial", z)
            np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-10)

    def test_row_shift_invariance(self):
        rng = np.random.default_rng(3)
        z = rng.normal(size=(4, 5))
        c = rng.normal(size=(4, 1))
        np.testing.assert_allclose(
            link_forward("multinomial", z + c),
            link_forward("multinomial", z),
            atol=1e-12,
        )

    def test_overflow_safe_softmax(self):
        z = np.array([[800.0, 0.0], [-800.0, 0.0]])
        p = link_forward("multinomial", z)
        assert np.isfinite(p).all()
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


class TestLinkInverse:
    def test_poisson_unit_intensity_gives_zero(self):
        assert np.array_equal(link_inverse("poisson", np.ones((2, 2))), np.zeros((2, 2)))

    def test_multinomial_uniform_gives_zero_row(self):
        p = np.full((1, 5), 0.2)
        np.testing.assert_allclose(link_inverse("multinomial", p), np.zeros((1, 5)), atol=1e-14)

    def test_round_trip_multinomial(self):
        rng = np.random.default_rng(11)
        raw = rng.random((6, 4)) + 0.05
        p = raw / raw.sum(axis=1, keepdims=True)
        back = link_forward("multinomial", link_inverse("multinomial", p))
        np.testing.assert_allclose(back, p, rtol=1e-12)

    def test_round_trip_poisson(self):
        rng = np.random.default_rng(12)
        x = rng.random((5, 3)) * 9.0 + 0.1
        np.testing.assert_allclose(
            link_forward("poisson", link_inverse("poisson", x)), x, rtol=1e-12
        )

    def test_multinomial_preimage_has_zero_row_means(self):
        rng = np.random.default_rng(13)
        raw = rng.random((4, 6)) + 0.1
        p = raw / raw.sum(axis=1, keepdims=True)
        z = link_inverse("multinomial", p)
        np.testing.assert_allclose(z.mean(axis=1), 0.0, atol=1e-14)

    def test_nonpositive_entry_rejected(self):
        with pytest.raises(DataError):
            link_inverse("poisson", np.array([[1.0, 0.0]]))


class TestNll:
    def test_poisson_all_zero(self):
        y = np.zeros((2, 2))
        z = np.zeros((2, 2))
        assert nll("poisson", y, z) == 4.0

    def test_multinomial_zero_latent(self):
        rng = np.random.default_rng(5)
        y = rng.integers(1, 9, size=(3, 5)).astype(float)
        assert nll("multinomial", y, np.zeros((3, 5))) == pytest.approx(
            3.0 * math.log(5.0), rel=1e-14
        )

    @pytest.mark.parametrize("model", ["poisson", "multinomial"])
    def test_matches_naive_summation(self, model):
        rng = np.random.default_rng(17)
        y = rng.integers(1, 9, size=(4, 3)).astype(float)
        z = rng.normal(size=(4, 3))
        assert nll(model, y, z) == pytest.approx(naive_nll(model, y, z), rel=1e-12)

    def test_row_shift_invariance_multinomial(self):
        rng = np.random.default_rng(19)
        y = rng.integers(1, 9, size=(4, 3)).astype(float)
        z = rng.normal(size=(4, 3))
        shifted = z + rng.normal(size=(4, 1))
        assert abs(nll("multinomial", y, z) - nll("multinomial", y, shifted)) < 1e-10

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            nll("poisson", np.zeros((2, 2)), np.zeros((2, 3)))


class TestNllGrad:
    def test_poisson_stationary_at_log_counts(self):
        rng = np.random.default_rng(23)
        y = rng.integers(1, 9, size=(3, 4)).astype(float)
        np.testing.assert_allclose(
            nll_grad("poisson", y, np.log(y)), np.zeros((3, 4)), atol=1e-12
        )

    def test_multinomial_stationary_at_empirical(self):
        rng = np.random.default_rng(29)
        y = rng.integers(1, 9, size=(3, 4)).astype(float)
        p = y / y.sum(axis=1, keepdims=True)
        z = np.log(p)
        np.testing.assert_allclose(
            nll_grad("multinomial", y, z), np.zeros((3, 4)), atol=1e-12
        )

    @pytest.mark.parametrize("model", ["poisson", "multinomial"])
    def test_matches_central_differences(self, model):
        rng = np.random.default_rng(31)
        y = rng.integers(1, 9, size=(4, 3)).astype(float)
        z = rng.normal(size=(4, 3))
        grad = nll_grad(model, y, z)
        h = 1e-6
        fd = np.zeros_like(z)
        for i in range(4):
            for j in range(3):
                zp, zm = z.copy(), z.copy()
                zp[i, j] += h
                zm[i, j] -= h
                fd[i, j] = (nll(model, y, zp) - nll(model, y, zm)) / (2 * h)
        assert np.linalg.norm(fd - grad) / np.linalg.norm(grad) < 1e-5

    def test_multinomial_gradient_rows_sum_to_zero(self):
        rng = np.random.default_rng(37)
        y = rng.integers(1, 9, size=(5, 4)).astype(float)
        z = rng.normal(size=(5, 4))
        g = nll_grad("multinomial", y, z)
        np.testing.assert_allclose(g.sum(axis=1), 0.0, atol=1e-12)

    @pytest.mark.parametrize("h", [1e-3, 1e-2, 1e-1])
    def test_multinomial_gradient_half_lipschitz(self, h):
        rng = np.random.default_rng(41)
        y = rng.integers(1, 9, size=(4, 5)).astype(float)
        for _ in range(50):
            z = rng.normal(scale=2.0, size=(4, 5))
            v = rng.normal(size=(4, 5))
            v /= np.linalg.norm(v)
            delta = nll_grad("multinomial", y, z + h * v) - nll_grad("multinomial", y, z)
            assert np.linalg.norm(delta) <= 0.5 * h + 1e-8


class TestStepSize:
    def test_poisson_inverse_max_count(self):
        y = np.array([[1.0, 7.0], [3.0, 2.0]])
        assert step_size("poisson", y) == pytest.approx(1.0 / 7.0, rel=1e-15)

    def test_multinomial_constant(self):
        y = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert step_size("multinomial", y) == 2.0

    def test_poisson_all_zero_rejected(self):
        with pytest.raises(DataError):
            step_size("poisson", np.zeros((2, 2)))


class TestValidation:
    def test_unknown_model_rejected(self):
        with pytest.raises(DataError):
            nll("gamma", np.ones((2, 2)), np.zeros((2, 2)))

    def test_model_enum_serializes_as_string(self):
        assert Model.POISSON.value == "poisson"
        assert Model.MULTINOMIAL.value == "multinomial"
        assert Model("poisson") is Model.POISSON

    def test_non_finite_latent_rejected(self):
        z = np.array([[0.0, np.inf]])
        with pytest.raises(DataError):
            link_forward("poisson", z)

    def test_multinomial_zero_row_total_rejected(self):
        y = np.array([[0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DataError):
            nll("multinomial", y, np.zeros((2, 2)))
