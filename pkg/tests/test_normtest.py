import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.polynomial import hermite_e
from scipy import integrate, stats

from gpdnorm.estimators import EstimateBatch, EstimateRecord, Method
from gpdnorm.gpd import GpdParams
from gpdnorm.normtest import (DegenerateDataError, EdgeworthSpec, NormalityMethod,
                              PValueMethod, edgeworth_density, jarque_bera, jb_statistic,
                              lilliefors, lilliefors_statistic, moment_stats, mse_bias_summary,
                              null_distribution, t_star, z_from_published)

finite = st.floats(-1e3, 1e3, allow_nan=False)
samples = arrays(np.float64, st.integers(10, 60), elements=finite).filter(
    lambda a: np.ptp(a) > 1e-3 * (1 + np.abs(a).max()))


class TestMoments:
    def test_two_point(self):
        m = moment_stats([-1.0, 1.0, -1.0, 1.0])
        assert m.skewness == 0.0 and m.kurtosis == 1.0

    @given(samples, st.floats(-100, 100), st.floats(0.01, 100))
    def test_affine_invariance(self, x, a, c):
        m1, m2 = moment_stats(x), moment_stats(a + c * x)
        assert m2.skewness == pytest.approx(m1.skewness, abs=1e-8)
        assert m2.kurtosis == pytest.approx(m1.kurtosis, rel=1e-8)

    def test_normal_population(self):
        m = moment_stats(np.random.default_rng(0).normal(size=1_000_000))
        assert abs(m.skewness) < 0.01 and abs(m.kurtosis - 3) < 0.02

    def test_zero_variance(self):
        with pytest.raises(DegenerateDataError):
            moment_stats([2.0] * 10)


class TestJarqueBera:
    def test_matches_scipy(self, rng):
        for n in (10, 57, 400):
            x = rng.standard_gamma(2.0, n)
            assert jb_statistic(x) == pytest.approx(stats.jarque_bera(x).statistic, rel=1e-12)

    def test_hand_value(self):
        # moments 0.0124, 3.4413 at n = 1000
        jb = 1000 / 6 * (0.0124 ** 2 + 0.4413 ** 2 / 4)
        assert jb == pytest.approx(8.1400, abs=1e-4)
        assert stats.chi2.sf(jb, 2) == pytest.approx(math.exp(-jb / 2), rel=1e-12)

    def test_perfect_moments(self):
        # symmetric sample with kurtosis exactly 3: values 0, +-a, +-b chosen to match
        a = 1.0
        b = math.sqrt(3.0) * a  # (0, +-a, +-b) with weights below gives m4 / m2^2 = 3
        x = np.array([0.0] * 2 + [a, -a] * 3 + [b, -b])
        m = moment_stats(x)
        assert m.skewness == pytest.approx(0.0, abs=1e-15)
        if abs(m.kurtosis - 3) < 1e-12:
            r = jarque_bera(x, pvalue_method="asymptotic")
            assert r.statistic == pytest.approx(0, abs=1e-10) and r.pvalue == pytest.approx(1)

    @given(samples, st.floats(-100, 100), st.floats(0.01, 100))
    def test_affine_invariance(self, x, a, c):
        assert jb_statistic(a + c * x) == pytest.approx(jb_statistic(x), rel=1e-8, abs=1e-10)

    def test_pvalue_range_and_tag(self, rng):
        r = jarque_bera(rng.normal(size=30), mc_reps=500)
        assert 0 < r.pvalue <= 1 and r.pvalue_method is PValueMethod.MONTE_CARLO
        assert r.method is NormalityMethod.JARQUE_BERA and r.n == 30

    def test_exact_not_supported(self, rng):
        with pytest.raises(ValueError):
            jarque_bera(rng.normal(size=30), pvalue_method="exact")

    def test_mc_pvalue_continuity_correction(self):
        x = np.random.default_rng(1).normal(size=20)
        null = null_distribution(NormalityMethod.JARQUE_BERA, 20, 99, rng=5)
        expected = (1 + np.sum(null >= jb_statistic(x))) / 100
        assert jarque_bera(x, mc_reps=99, rng=5).pvalue == expected

    def test_calibration_n50(self):
        rng = np.random.default_rng(50)
        rej = sum(jarque_bera(rng.normal(size=50)).pvalue < 0.05 for _ in range(2000))
        assert abs(rej / 2000 - 0.05) <= 0.015


class TestLilliefors:
    def test_matches_kstest(self, rng):
        for n in (5, 40, 300):
            x = rng.normal(3, 2, n)
            z = (x - x.mean()) / x.std(ddof=1)
            assert lilliefors_statistic(x) == pytest.approx(stats.kstest(z, "norm").statistic,
                                                            rel=1e-12)

    def test_plug_in_quantiles(self):
        n = 100
        x = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        r = lilliefors(x)
        assert r.statistic < 0.03 and r.pvalue > 0.9

    @given(samples, st.floats(-100, 100), st.floats(0.01, 100))
    def test_affine_invariance(self, x, a, c):
        assert lilliefors_statistic(a + c * x) == pytest.approx(lilliefors_statistic(x), abs=1e-10)

    def test_calibration_n50(self):
        rng = np.random.default_rng(51)
        rej = sum(lilliefors(rng.normal(size=50)).pvalue < 0.05 for _ in range(2000))
        assert abs(rej / 2000 - 0.05) <= 0.015

    def test_detects_skew(self):
        x = np.random.default_rng(2).exponential(size=200)
        assert lilliefors(x).pvalue < 0.01 and jarque_bera(x).pvalue < 0.01


class TestNullTables:
    def test_cached_and_readonly(self):
        a = null_distribution("jarque_bera", 30, 200, rng=3)
        b = null_distribution("jarque_bera", 30, 200, rng=3)
        assert a is b and not a.flags.writeable

    def test_generator_draws_fresh(self):
        a = null_distribution("lilliefors", 30, 200, rng=np.random.default_rng(1))
        b = null_distribution("lilliefors", 30, 200, rng=np.random.default_rng(2))
        assert not np.array_equal(a, b)


class TestSummary:
    def test_symmetric_zero_bias(self):
        s = mse_bias_summary([0.4, 0.6] * 10, 0.5)
        assert s.bias == pytest.approx(0, abs=1e-15) and s.t == pytest.approx(0, abs=1e-12)
        assert s.z_pvalue == pytest.approx(1.0)

    @given(arrays(np.float64, st.integers(10, 300), elements=finite), st.floats(-1e3, 1e3))
    @settings(max_examples=300)
    def test_identity(self, est, theta0):
        if np.ptp(est) < 1e-6 * (1 + np.abs(est).max()):
            return
        s = mse_bias_summary(est, theta0)
        m = est.size
        assert abs(m * s.mse - (m - 1) * s.S2 - m * s.bias ** 2) <= 1e-9 * m * s.mse
        assert s.mse >= s.bias ** 2

    def test_t_equals_sqrt_m_bias_over_s(self, rng):
        est = rng.normal(0.55, 0.1, 1000)
        s = mse_bias_summary(est, 0.5)
        assert s.t == pytest.approx(math.sqrt(1000) * s.bias / math.sqrt(s.S2), rel=1e-12)

    def test_path_equivalence(self, rng):
        est = rng.gamma(3.0, 0.1, 777)
        s = mse_bias_summary(est, 0.25)
        z, _ = z_from_published(s.bias, math.sqrt(s.mse), s.m)
        assert s.t == pytest.approx(z, abs=1e-10)

    def test_reconstructed_published_row(self):
        # a batch with bias 0.16 and RMSE 0.46 exactly, m = 50000
        m = 50_000
        sd = math.sqrt((0.46 ** 2 - 0.16 ** 2))
        base = np.random.default_rng(0).normal(size=m)
        base = (base - base.mean()) / base.std()
        s = mse_bias_summary(0.4 + 0.16 + sd * base, 0.4)
        assert s.t == pytest.approx(82.9561, abs=1e-3)

    def test_accepts_batch(self):
        recs = [EstimateRecord(v, 1.0, Method.ZS) for v in np.linspace(0.3, 0.8, 20)]
        batch = EstimateBatch(recs, 25, GpdParams(0.5, 1.0), Method.ZS)
        assert mse_bias_summary(batch, 0.5).m == 20

    def test_degenerate(self):
        with pytest.raises(DegenerateDataError):
            mse_bias_summary([0.7] * 20, 0.5)
        with pytest.raises(DegenerateDataError):
            mse_bias_summary([0.7] * 5, 0.5)

    def test_power_grows_with_skew(self):
        rng = np.random.default_rng(7)
        rates = []
        for s in (0.5, 1.0, 2.0):
            # 20 blocks of 50 trials; log-normal shifted so its median sits at theta0 = 0
            blocks = [np.mean([mse_bias_summary(rng.lognormal(0.0, s, 20) - 1.0, 0.0).z_pvalue
                               < 0.05 for _ in range(50)]) for _ in range(20)]
            rates.append(np.mean(blocks))
        assert rates[0] <= rates[1] <= rates[2]
        assert rates[2] > rates[0]

    def test_rmse_and_report(self, rng):
        s = mse_bias_summary(rng.normal(0.5, 0.1, 100), 0.5)
        assert s.rmse == pytest.approx(math.sqrt(s.mse))
        assert s.as_report().method is NormalityMethod.MSE_BIAS_T


class TestPublished:
    def test_table_row(self):
        z, zs = z_from_published(0.16, 0.46, 50_000, 1000)
        assert z == pytest.approx(math.sqrt(49_999) * 0.16 / math.sqrt(0.46 ** 2 - 0.16 ** 2))
        assert zs == pytest.approx(math.sqrt(999) * 0.16 / math.sqrt(0.46 ** 2 - 0.16 ** 2))
        assert abs(z - 82.9561) < 0.05 and abs(zs - 11.7318) < 0.05

    def test_mom_row(self):
        z, zs = z_from_published(0.3, 0.38, 50_000)
        assert abs(z - 287.6118) < 0.05 and zs is None

    def test_zero_bias(self):
        assert z_from_published(0.0, 0.3, 1000, 100) == (0.0, 0.0)

    @pytest.mark.parametrize("bias,rmse", [(0.13, 0.13), (0.2, 0.1), (-0.3, 0.3)])
    def test_domain(self, bias, rmse):
        with pytest.raises(ValueError):
            z_from_published(bias, rmse, 1000)

    @given(st.floats(-1, 1), st.floats(0.01, 2), st.integers(2, 10 ** 6), st.integers(2, 10 ** 6))
    def test_ratio(self, bias, extra, m, mt):
        z, zs = z_from_published(bias, abs(bias) + extra, m, mt)
        if abs(bias) > 1e-100:  # subnormal products lose precision
            assert z / zs == pytest.approx(math.sqrt((m - 1) / (mt - 1)), rel=1e-12)


class TestTStar:
    def test_symmetric_pairs(self):
        assert t_star([0.0] * 10 + [1.5, -1.5] * 5) == pytest.approx(0.0, abs=1e-12)

    def test_null(self):
        rng = np.random.default_rng(3)
        vals = [abs(t_star(rng.normal(size=10_000))) for _ in range(200)]
        assert max(vals) < 4

    def test_shift(self):
        t = t_star(np.random.default_rng(4).normal(0.1, 1.0, 10_000))
        assert t == pytest.approx(math.sqrt(9999) * 0.1, rel=0.3)

    def test_formula(self, rng):
        t = rng.normal(0.2, 1.3, 50)
        assert t_star(t) == pytest.approx(math.sqrt(49) * t.mean() / t.std(ddof=0))

    def test_zero_variance(self):
        with pytest.raises(DegenerateDataError):
            t_star([1.0] * 12)


class TestEdgeworth:
    def _oracle(self, z, r3, r4, n):
        # probabilists' Hermite polynomials from numpy
        he = lambda k: hermite_e.hermeval(z, [0] * k + [1])
        corr = 1 + r3 * he(3) / (6 * math.sqrt(n)) + (3 * r4 * he(4) + r3 ** 2 * he(6)) / (72 * n)
        return stats.norm.pdf(z) * corr

    def test_normal_case_exact(self):
        z = np.linspace(-8, 8, 1601)
        assert np.array_equal(edgeworth_density(z, EdgeworthSpec(0.0, 0.0, 3)), stats.norm.pdf(z))

    @given(st.floats(-3, 3), st.floats(-3, 8), st.integers(1, 10 ** 4), st.floats(-9, 9))
    def test_hermite_oracle(self, r3, r4, n, z):
        got = edgeworth_density(z, EdgeworthSpec(r3, r4, n))
        assert got == pytest.approx(self._oracle(z, r3, r4, n), rel=1e-9, abs=1e-14)

    def test_at_zero(self):
        r3, r4, n = 0.7, 1.2, 40
        expected = stats.norm.pdf(0) * (1 + (9 * r4 - 15 * r3 ** 2) / (72 * n))
        assert edgeworth_density(0.0, EdgeworthSpec(r3, r4, n)) == pytest.approx(expected)

    @given(st.floats(-2, 2), st.floats(-2, 6), st.integers(1, 1000))
    @settings(max_examples=30)
    def test_integrates_to_one(self, r3, r4, n):
        z = np.arange(-10, 10 + 5e-4, 1e-3)
        f = edgeworth_density(z, EdgeworthSpec(r3, r4, n))
        assert abs(integrate.trapezoid(f, z) - 1) <= 1e-6

    def test_negative_flag(self):
        f, neg = edgeworth_density(np.array([2.5, 1.0]), EdgeworthSpec(-3.0, 0.0, 1),
                                   return_flag=True)
        assert neg[0] and not neg[1] and f[0] < 0

    def test_bad_n(self):
        with pytest.raises(ValueError):
            EdgeworthSpec(0.1, 0.1, 0)
