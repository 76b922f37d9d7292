import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qae_conformal.errors import DomainError
from qae_conformal.quantiles import (
    AbsoluteResidualFamily,
    LocallyWeightedFamily,
    QuantileBandFamily,
    SmoothingKernel,
    empirical_quantile,
    gamma_smooth,
    gamma_smooth_derivative,
    nested_score,
    pinball_loss,
    quantile_rank,
    smoothed_cdf,
    smoothed_quantile,
)

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)
levels = st.floats(1e-3, 1.0)


def sort_oracle(s, q):
    s = sorted(s)
    return s[math.ceil(q * len(s) - 1e-9 * q * len(s)) - 1]


class TestEmpiricalQuantile:
    def test_conformal_level_on_nine_points(self):
        assert empirical_quantile(range(1, 10), 0.9 * 10 / 9) == 9

    def test_single_point(self):
        assert empirical_quantile([5.0], 1.0) == 5.0

    def test_level_above_one_is_infinite(self):
        assert empirical_quantile([1, 2, 3, 4], 0.9 * 5 / 4) == math.inf

    @pytest.mark.parametrize("q", [0.0, -0.1])
    def test_nonpositive_level_rejected(self, q):
        with pytest.raises(DomainError):
            empirical_quantile([1.0], q)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            empirical_quantile([], 0.5)

    @given(samples, levels)
    def test_matches_sort_oracle(self, s, q):
        assert empirical_quantile(s, q) == sort_oracle(s, q)

    @given(samples, levels, levels)
    def test_nondecreasing_in_level(self, s, q1, q2):
        lo, hi = sorted((q1, q2))
        assert empirical_quantile(s, lo) <= empirical_quantile(s, hi)

    @given(samples, levels)
    def test_is_infimum(self, s, q):
        t = empirical_quantile(s, q)
        a = np.asarray(s)
        assert np.mean(a <= t) >= q - 1e-9
        assert np.mean(a < t) < q

    def test_rank_rounding_is_stable(self):
        assert quantile_rank(0.9 * 20 / 19, 19) == 18
        assert quantile_rank(0.5, 4) == 2


class TestPinball:
    def test_examples(self):
        assert pinball_loss(0.0, 0.3) == 0.0
        assert pinball_loss(1.0, 0.9) == pytest.approx(0.9)
        assert pinball_loss(-1.0, 0.9) == pytest.approx(0.1)

    @pytest.mark.parametrize("q", [0.0, 1.0, 1.5])
    def test_level_domain(self, q):
        with pytest.raises(DomainError):
            pinball_loss(1.0, q)

    @given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0, 1), st.floats(0.01, 0.99))
    def test_convex(self, u, v, lam, q):
        lhs = pinball_loss(lam * u + (1 - lam) * v, q)
        assert lhs <= lam * pinball_loss(u, q) + (1 - lam) * pinball_loss(v, q) + 1e-9


class TestKernel:
    eps = 0.1

    def test_endpoints_and_midpoint(self):
        assert gamma_smooth(-self.eps, self.eps) == pytest.approx(1.0)
        assert gamma_smooth(self.eps, self.eps) == pytest.approx(0.0, abs=1e-15)
        assert gamma_smooth(0.0, self.eps) == pytest.approx(0.5)

    def test_half_window_polynomial(self):
        expected = 15 / 16 * (-1 / 160 + 1 / 12 - 1 / 2 + 8 / 15)
        assert gamma_smooth(self.eps / 2, self.eps) == pytest.approx(expected, rel=1e-12)

    def test_saturation_outside_window(self):
        assert gamma_smooth(-5.0, self.eps) == 1.0
        assert gamma_smooth(5.0, self.eps) == 0.0

    def test_derivative_examples(self):
        assert gamma_smooth_derivative(0.0, 0.1) == pytest.approx(-9.375)
        assert gamma_smooth_derivative(0.1, 0.1) == 0.0
        assert gamma_smooth_derivative(-0.1, 0.1) == 0.0

    def test_derivative_integrates_to_minus_one(self):
        z = np.linspace(-self.eps, self.eps, 20001)
        assert np.trapezoid(gamma_smooth_derivative(z, self.eps), z) == pytest.approx(-1.0, abs=1e-8)

    @pytest.mark.parametrize("z", np.linspace(-0.1, 0.1, 9))
    def test_matches_integrated_derivative(self, z):
        grid = np.linspace(-self.eps, z, 20001)
        integral = np.trapezoid(gamma_smooth_derivative(grid, self.eps), grid)
        assert gamma_smooth(z, self.eps) == pytest.approx(1 + integral, abs=1e-8)

    def test_derivative_matches_finite_difference(self):
        z = np.linspace(-0.2, 0.2, 41)
        h = 1e-7
        fd = (gamma_smooth(z + h, 0.1) - gamma_smooth(z - h, 0.1)) / (2 * h)
        assert np.allclose(gamma_smooth_derivative(z, 0.1), fd, atol=1e-5)

    @given(st.floats(-1, 1), st.floats(-1, 1))
    def test_nonincreasing(self, a, b):
        lo, hi = sorted((a, b))
        assert gamma_smooth(lo, 0.1) >= gamma_smooth(hi, 0.1)

    def test_kernel_object(self):
        k = SmoothingKernel(0.1)
        assert k(0.0) == pytest.approx(0.5)
        assert k.derivative(0.0) == pytest.approx(-9.375)
        with pytest.raises(DomainError):
            SmoothingKernel(0.0)


class TestSmoothedQuantile:
    def test_cdf_examples(self):
        s = [0.0, 1.0, 2.0]
        assert smoothed_cdf(s, 2.1, 0.1) == 1.0
        assert smoothed_cdf(s, -0.1, 0.1) == 0.0
        assert smoothed_cdf([0.0], 0.0, 0.1) == pytest.approx(0.5)

    def test_cdf_empty_rejected(self):
        with pytest.raises(DomainError):
            smoothed_cdf([], 0.0, 0.1)

    def test_single_point_median(self):
        assert smoothed_quantile([0.0], 0.5, 0.1) == pytest.approx(0.0, abs=1e-9)

    @given(samples, st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=10))
    def test_cdf_nondecreasing_and_permutation_invariant(self, s, ts):
        ts = sorted(ts)
        vals = [smoothed_cdf(s, t, 0.5) for t in ts]
        assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
        assert smoothed_cdf(s[::-1], ts[0], 0.5) == pytest.approx(vals[0], abs=1e-12)

    @given(st.integers(1, 30), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
    def test_within_epsilon_of_empirical_when_separated(self, n, q, seed):
        eps = 0.1
        gaps = np.random.default_rng(seed).uniform(2 * eps + 1e-3, 1.0, size=n)
        s = np.cumsum(gaps)
        assert abs(smoothed_quantile(s, q, eps) - empirical_quantile(s, q)) <= eps + 1e-9

    def test_bisection_tolerance(self, rng):
        s = rng.normal(size=50)
        t = smoothed_quantile(s, 0.7, 0.1)
        assert smoothed_cdf(s, t, 0.1) >= 0.7
        assert smoothed_cdf(s, t - 2e-10, 0.1) < 0.7 + 1e-8

    @pytest.mark.parametrize("q", [0.0, 1.0])
    def test_level_domain(self, q):
        with pytest.raises(DomainError):
            smoothed_quantile([1.0, 2.0], q, 0.1)


class TestNestedScore:
    def test_absolute_residual(self):
        fam = AbsoluteResidualFamily(lambda x: 2.0)
        assert nested_score(fam, None, 5.0) == 3.0

    def test_quantile_band_negative(self):
        fam = QuantileBandFamily(lambda x: 0.0, lambda x: 1.0)
        assert nested_score(fam, None, 0.5) == -0.5

    def test_locally_weighted(self):
        fam = LocallyWeightedFamily(lambda x: 0.0, lambda x: 2.0)
        assert nested_score(fam, None, 4.0) == 2.0

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_nonpositive_scale_rejected(self, sigma):
        fam = LocallyWeightedFamily(lambda x: 0.0, lambda x: sigma)
        with pytest.raises(DomainError):
            nested_score(fam, None, 1.0)

    @given(st.floats(-10, 10), st.floats(0.1, 5), st.floats(-10, 10))
    def test_bisection_agrees_with_closed_form(self, mu, sigma, y):
        fam = LocallyWeightedFamily(lambda x: mu, lambda x: sigma)
        closed = nested_score(fam, None, y)
        if closed == 0:
            return
        searched = nested_score(fam, None, y, bracket=(0.0, closed + 1.0))
        assert searched == pytest.approx(closed, abs=1e-9)
