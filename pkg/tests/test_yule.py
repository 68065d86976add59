"""Tests of the Yule-Simon distribution machinery.

Expected values are either analytic (pmf(1) = rho/(rho+1), the size
recurrence), computed by independent summation oracles inside the test, or
cross-checked against mpmath at high precision.
"""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forgesim import (
    DegenerateDataError,
    DomainError,
    SizeDistribution,
    cdf,
    log_pmf,
    mle_rho,
    p0_from_rho,
    pmf,
    rho_from_p0,
    sample,
    survival,
)
from forgesim.yule import DEFAULT_CDF_CACHE, _cdf_table


def rng(seed=0):
    return np.random.default_rng(seed)


class TestPmf:
    def test_pmf_at_one_is_rho_over_rho_plus_one(self):
        assert pmf(1, 3.0) == pytest.approx(0.75, abs=1e-14)
        for rho in (0.5, 1.2, 2.0, 7.5):
            assert pmf(1, rho) == pytest.approx(rho / (rho + 1.0), rel=1e-14)

    def test_normalisation_with_analytic_tail(self):
        # direct summation oracle: head sum plus closed-form tail must be 1
        x = np.arange(1, 1_000_001)
        for rho in (1.2, 2.0, 3.0, 5.0):
            total = pmf(x, rho).sum() + survival(1_000_000, rho)
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_power_law_tail(self):
        # the tail is a power law with exponent rho+1 and constant
        # rho*Gamma(rho+1); note the Gamma factor, which informal statements
        # of the asymptotic tend to drop
        rho = 3.0
        local_slope = (np.log(pmf(400, rho)) - np.log(pmf(200, rho))) / np.log(2.0)
        assert local_slope == pytest.approx(-(rho + 1.0), rel=0.02)
        constant = rho * 6.0  # Gamma(4) = 6
        ratio = pmf(1000, rho) / (constant * 1000.0**-4)
        assert abs(ratio - 1.0) < 0.02

    def test_recurrence_to_machine_precision(self):
        # each pmf evaluation carries ~1e-13 relative error (composed
        # special functions), so the ratio is pinned at 1e-12
        x = np.arange(2, 10_001)
        for rho in (1.2, 3.0, 10.0):
            lhs = pmf(x, rho) / pmf(x - 1, rho)
            rhs = (x - 1.0) / (x + rho)
            np.testing.assert_allclose(lhs, rhs, rtol=1e-12)

    def test_tail_ratio_monotone_to_one(self):
        rho = 3.0
        x = np.array([10, 100, 1000, 10_000, 100_000])
        ratios = x ** (rho + 1) * pmf(x, rho) / (rho * 6.0)  # Gamma(rho+1) = 6
        assert np.all(np.diff(ratios) > 0)  # increasing toward 1 from below
        assert np.all(ratios < 1.0)
        assert ratios[-1] == pytest.approx(1.0, rel=1e-4)

    def test_twelve_digit_accuracy_against_mpmath(self):
        mpmath.mp.dps = 40
        for rho in (1.2, 3.0, 50.0):
            for x in (1, 63, 64, 1000, 10**6):
                ours = mpmath.mpf(float(pmf(x, rho)))
                exact = mpmath.mpf(rho) * mpmath.beta(x, rho + 1)
                assert abs((ours - exact) / exact) < 1e-12

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            pmf(0, 3.0)
        with pytest.raises(DomainError):
            pmf(2.5, 3.0)
        with pytest.raises(DomainError):
            pmf(1, 0.0)
        with pytest.raises(DomainError):
            pmf(1, -1.0)

    def test_log_pmf_matches_pmf(self):
        x = np.arange(1, 100)
        np.testing.assert_allclose(np.exp(log_pmf(x, 2.5)), pmf(x, 2.5), rtol=1e-14)


class TestCumulatives:
    def test_cdf_at_one(self):
        assert cdf(1, 3.0) == pytest.approx(0.75, abs=1e-14)

    def test_cdf_approaches_one(self):
        assert cdf(10**9, 3.0) == pytest.approx(1.0, abs=1e-8)

    def test_survival_against_brute_force_tail_sum(self):
        # oracle: chunked direct summation of the pmf beyond x, truncated where
        # the remainder is provably below the tolerance
        rho, x = 1.2, 50
        top = 30_000_000
        acc = 0.0
        for lo in range(x + 1, top, 3_000_000):
            ys = np.arange(lo, min(lo + 3_000_000, top))
            acc += pmf(ys, rho).sum()
        remainder_bound = survival(top - 1, rho)
        ours = survival(x, rho)
        assert abs(ours - acc) <= abs(acc) * 1e-6 + remainder_bound

    def test_cdf_is_prefix_sum_of_pmf(self):
        x = np.arange(1, 2001)
        for rho in (1.2, 3.0):
            prefix = np.cumsum(pmf(x, rho))
            np.testing.assert_allclose(cdf(x, rho), prefix, rtol=1e-11)

    def test_cached_table_matches_closed_form(self):
        table = _cdf_table(3.0, 10_000)
        x = np.arange(1, 10_001)
        np.testing.assert_allclose(table, cdf(x, 3.0), rtol=1e-10, atol=1e-15)


class TestSampling:
    def test_determinism(self):
        a = sample(3.0, 1000, rng(42))
        b = sample(3.0, 1000, rng(42))
        np.testing.assert_array_equal(a, b)

    def test_empirical_singleton_fraction(self):
        draws = sample(3.0, 100_000, rng(7))
        assert (draws == 1).mean() == pytest.approx(0.75, abs=0.01)

    def test_mle_round_trip(self):
        draws = sample(3.0, 10_000, rng(11))
        fit = mle_rho(SizeDistribution.from_sizes(draws))
        assert 2.85 <= fit.rho_hat <= 3.15

    def test_tail_fallback_agrees_with_big_table(self):
        # tiny cache forces the closed-form tail inversion; the draws must be
        # identical to what a table covering the whole range produces
        small = sample(1.2, 50_000, rng(3), x_cache=64)
        big = sample(1.2, 50_000, rng(3), x_cache=DEFAULT_CDF_CACHE)
        np.testing.assert_array_equal(small, big)

    def test_rejects_bad_n(self):
        with pytest.raises(DomainError):
            sample(3.0, 0, rng())


class TestMle:
    def test_recovers_rho_from_exact_expected_counts(self):
        x = np.arange(1, 5001)
        dist = SizeDistribution(x, pmf(x, 3.0) * 10_000)
        fit = mle_rho(dist)
        assert fit.rho_hat == pytest.approx(3.0, abs=0.01)
        assert fit.domain_flag
        assert fit.derived_p0 == pytest.approx(1.0 - 1.0 / fit.rho_hat, abs=1e-12)
        assert np.isfinite(fit.log_likelihood)

    def test_recovers_firm_size_regime(self):
        draws = sample(1.2, 10_000, rng(5))
        fit = mle_rho(SizeDistribution.from_sizes(draws))
        # sampling sd of rho_hat here is about 0.015
        assert fit.rho_hat == pytest.approx(1.2, abs=0.06)

    def test_all_singletons_degenerate(self):
        with pytest.raises(DegenerateDataError):
            mle_rho(SizeDistribution.from_mapping({1: 100}))

    def test_too_few_observations(self):
        with pytest.raises(DegenerateDataError):
            mle_rho(SizeDistribution.from_mapping({2: 1}))

    def test_domain_flag_false_below_one(self):
        # steep histogram pushes the estimate below 1; reported, not rejected
        dist = SizeDistribution.from_mapping({1: 10_000, 2: 100})
        fit = mle_rho(dist)
        assert fit.rho_hat > 0
        assert fit.domain_flag == (fit.rho_hat > 1.0)


class TestRhoP0Mapping:
    def test_paper_anchor_values(self):
        assert rho_from_p0(2.0 / 3.0) == pytest.approx(3.0, rel=1e-14)
        assert rho_from_p0(0.16) == pytest.approx(1.1905, abs=1e-4)
        assert p0_from_rho(3.0) == pytest.approx(2.0 / 3.0, rel=1e-14)

    @given(st.floats(min_value=0.01, max_value=0.99))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, p0):
        assert p0_from_rho(rho_from_p0(p0)) == pytest.approx(p0, rel=1e-12)

    def test_domain_errors(self):
        for bad in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(DomainError):
                rho_from_p0(bad)
        with pytest.raises(DomainError):
            p0_from_rho(1.0)
