import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from gpdnorm.estimators import (BootstrapError, DegenerateSampleError, EstimateBatch,
                                EstimateRecord, Method, bootstrap_sd, estimate, estimate_ml,
                                estimate_pwm, estimate_zs, fit_batch, profile_loglik,
                                zs_grid, zs_grid_size, zs_weights)
from gpdnorm.gpd import GpdParams, sample_gpd


def _sample(seed, n, xi=0.5, sigma=1.0):
    return np.sort(sample_gpd(n, GpdParams(xi, sigma), np.random.default_rng(seed)))


def _loglik_direct(x, xi, sigma):
    # GPD log-likelihood written out independently of the b parametrization
    z = 1 + xi * x / sigma
    return -x.size * math.log(sigma) - (1 / xi + 1) * np.log(z).sum()


class TestMethod:
    def test_parse(self):
        assert Method.parse("ZS") is Method.ZS
        assert Method.parse(Method.ML) is Method.ML
        with pytest.raises(ValueError):
            Method.parse("mom")


class TestPwm:
    def test_hand_arithmetic(self):
        x = [Fraction(1), Fraction(2), Fraction(4)]
        n = 3
        a0 = sum(x) / n
        a1 = sum(v * (1 - (Fraction(j) - Fraction(35, 100)) / n) for j, v in enumerate(x, 1)) / n
        assert a0 == Fraction(7, 3) and float(a1) == pytest.approx(0.716667, abs=1e-6)
        xi = 2 - a0 / (a0 - 2 * a1)
        sigma = 2 * a0 * a1 / (a0 - 2 * a1)
        r = estimate_pwm([4.0, 1.0, 2.0])
        assert r.xi_hat == pytest.approx(float(xi), abs=1e-12)
        assert r.sigma_hat == pytest.approx(float(sigma), abs=1e-12)
        assert round(r.xi_hat, 4) == -0.5926 and round(r.sigma_hat, 4) == 3.7160

    def test_scale(self):
        x = _sample(1, 200)
        a, b = estimate_pwm(x), estimate_pwm(10 * x)
        assert b.xi_hat == pytest.approx(a.xi_hat, abs=1e-12)
        assert b.sigma_hat == pytest.approx(10 * a.sigma_hat, rel=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            estimate_pwm([2.0, 2.0, 2.0])
        with pytest.raises(DegenerateSampleError):
            estimate_pwm([1.0, 2.0])


class TestProfileLoglik:
    def test_hand_value(self):
        # x = (1, 2, 4), b = -1: k = -log(2 * 3 * 5) / 3
        k = -math.log(30) / 3
        expected = 3 * (math.log(-1 / k) + k - 1)
        assert profile_loglik(-1.0, [1.0, 2.0, 4.0]) == pytest.approx(expected, rel=1e-14)

    def test_matches_direct_likelihood(self):
        x = _sample(2, 300)
        for b in (-2.0, -0.3, 0.5 / x[-1]):
            k = -np.mean(np.log1p(-b * x))
            xi, sigma = -k, k / b
            direct = (_loglik_direct(x, xi, sigma) if abs(xi) > 1e-12
                      else -x.size * math.log(sigma) - x.sum() / sigma)
            assert profile_loglik(b, x) == pytest.approx(direct, rel=1e-11)

    def test_exponential_limit(self):
        x = _sample(3, 100)
        l0 = profile_loglik(0.0, x)
        assert l0 == pytest.approx(x.size * (-math.log(x.mean()) - 1), rel=1e-14)
        assert abs(profile_loglik(1e-9, x) - l0) < 1e-5
        assert abs(profile_loglik(-1e-9, x) - l0) < 1e-5

    def test_domain(self):
        with pytest.raises(ValueError):
            profile_loglik(0.25, [1.0, 2.0, 4.0])

    def test_grid_argmax(self):
        x = _sample(4, 10_000)
        bs = np.linspace(-1.5, 0.0, 3001)[:-1]
        ls = [profile_loglik(b, x) for b in bs]
        assert abs(bs[int(np.argmax(ls))] + 0.5) < 0.05


class TestMl:
    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_numerical_optimizer(self, seed):
        x = _sample(seed, 250)
        r = estimate_ml(x)
        # independent route: Nelder-Mead on the direct (xi, log sigma) likelihood
        res = optimize.minimize(lambda v: -_loglik_direct(x, v[0], math.exp(v[1])),
                                [0.3, 0.0], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 5000})
        assert r.converged
        assert r.xi_hat == pytest.approx(res.x[0], abs=1e-5)
        assert r.sigma_hat == pytest.approx(math.exp(res.x[1]), rel=1e-5)
        assert _loglik_direct(x, r.xi_hat, r.sigma_hat) >= -res.fun - 1e-9

    @pytest.mark.parametrize("c", [0.1, 10.0, 1000.0])
    def test_scale_equivariance(self, c):
        for seed in range(5):
            x = _sample(seed, 120)
            a, b = estimate_ml(x), estimate_ml(c * x)
            assert abs(b.xi_hat - a.xi_hat) <= 1e-8
            assert abs(b.sigma_hat - c * a.sigma_hat) <= 1e-8 * c

    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([15, 40, 200]), st.floats(0.1, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_dominates_zs_grid(self, seed, n, xi):
        x = _sample(seed, n, xi)
        r = estimate_ml(x)
        if not r.converged:
            return
        b_ml = -r.xi_hat / r.sigma_hat
        l_ml = profile_loglik(b_ml, x)
        for b in zs_grid(x):
            assert l_ml >= profile_loglik(b, x) - 1e-9 * abs(l_ml)

    def test_unbounded_likelihood_flagged(self):
        # mass piled at the maximum pushes the fit to the xi = -1 edge
        x = np.array([0.1, 0.2] + [1.0] * 30)
        r = estimate_ml(x)
        assert not r.converged

    def test_sign_coherence(self):
        X = np.sort(np.stack([sample_gpd(100, GpdParams(0.5, 1.0), np.random.default_rng(s))
                              for s in range(300)]), axis=1)
        xi, sigma, ok = fit_batch(X, Method.ML)
        assert np.all(sigma[ok] > 0)
        assert np.mean(xi[ok] > 0) > 0.95


class TestZs:
    @pytest.mark.parametrize("n,mg", [(25, 25), (100, 30), (10, 23), (250, 35)])
    def test_grid_size(self, n, mg):
        assert zs_grid_size(n) == mg

    def test_against_direct_formulas(self):
        x = _sample(7, 97, 0.3)
        n = x.size
        mg = 20 + math.isqrt(n)
        xq = x[int(n / 4 + 0.5) - 1]
        b = np.array([1 / x[-1] + (1 - math.sqrt(mg / (j - 0.5))) / (3 * xq)
                      for j in range(1, mg + 1)])
        ll = np.array([n * (math.log(bj / kj) + kj - 1)
                       for bj, kj in ((bj, -np.mean(np.log1p(-bj * x))) for bj in b)])
        w = np.exp(ll - ll.max())
        w /= w.sum()
        bhat = float(w @ b)
        xi = float(np.mean(np.log1p(-bhat * x)))
        r = estimate_zs(x)
        assert r.xi_hat == pytest.approx(xi, abs=1e-12)
        assert r.sigma_hat == pytest.approx(-xi / bhat, rel=1e-12)

    @given(st.integers(0, 2 ** 32 - 1), st.integers(5, 400))
    @settings(max_examples=80, deadline=None)
    def test_weights(self, seed, n):
        _, w = zs_weights(_sample(seed, n))
        assert np.all(w >= 0)
        assert abs(w.sum() - 1) <= 1e-12

    @pytest.mark.parametrize("c", [0.1, 10.0, 1000.0])
    def test_scale_equivariance(self, c):
        for seed in range(5):
            x = _sample(seed, 60)
            a, b = estimate_zs(x), estimate_zs(c * x)
            assert abs(b.xi_hat - a.xi_hat) <= 1e-8
            assert abs(b.sigma_hat - c * a.sigma_hat) <= 1e-8 * c

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            estimate_zs([0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0])
        with pytest.raises(DegenerateSampleError):
            estimate_zs([1.0, 2.0, 3.0])


class TestBatch:
    @pytest.mark.parametrize("method", list(Method))
    def test_batch_matches_single(self, method):
        X = np.stack([_sample(s, 50) for s in range(20)])
        xi, sigma, ok = fit_batch(X, method)
        for row, a, b in zip(X, xi, sigma):
            r = estimate(row, method)
            assert r.xi_hat == pytest.approx(a, abs=1e-13)
            assert r.sigma_hat == pytest.approx(b, rel=1e-13)

    @pytest.mark.parametrize("method", list(Method))
    def test_consistency_moderate_n(self, method):
        X = np.stack([_sample(100 + s, 20_000, 0.25) for s in range(20)])
        xi, _, ok = fit_batch(X, method)
        assert ok.all()
        assert abs(xi.mean() - 0.25) < 0.02

    def test_estimate_batch_container(self):
        recs = [EstimateRecord(0.1 * i, 1.0, Method.ZS) for i in range(3)]
        b = EstimateBatch(recs, 25, GpdParams(0.5, 1.0), Method.ZS)
        assert b.m == 3
        np.testing.assert_allclose(b.xi_hats, [0.0, 0.1, 0.2])


class TestBootstrap:
    def test_constant_stub(self):
        assert bootstrap_sd(_sample(1, 30), lambda r: 0.25, reps=100, rng=1) == 0.0

    def test_positive(self):
        assert bootstrap_sd(_sample(1, 30), Method.ZS, reps=200, rng=1) > 0

    def test_deterministic(self):
        x = _sample(2, 40)
        a = bootstrap_sd(x, Method.PWM, reps=300, rng=np.random.default_rng(9))
        b = bootstrap_sd(x, Method.PWM, reps=300, rng=np.random.default_rng(9))
        assert a == b

    def test_matches_plain_loop(self):
        # same resamples drawn by hand, one estimate_zs per row
        x = _sample(3, 30)
        got = bootstrap_sd(x, Method.ZS, reps=100, rng=np.random.default_rng(4))
        idx = np.random.default_rng(4).integers(0, x.size, size=(100, x.size))
        ref = np.std([estimate_zs(x[i]).xi_hat for i in idx], ddof=1)
        assert got == pytest.approx(ref, rel=1e-12)

    def test_too_many_failures(self):
        calls = iter(range(10 ** 6))

        def flaky(r):
            return math.nan if next(calls) % 5 == 0 else 0.1

        with pytest.raises(BootstrapError):
            bootstrap_sd(_sample(1, 30), flaky, reps=100, rng=1)

    def test_needs_rng(self):
        with pytest.raises(TypeError):
            bootstrap_sd(_sample(1, 30), Method.ZS, reps=100)

    def test_application_scale(self):
        # about 150 excesses at xi near 0.19: sd of order 0.09
        x = _sample(19, 150, 0.19, 0.0045)
        sd = bootstrap_sd(x, Method.ZS, reps=1000, rng=2)
        assert 0.05 <= sd <= 0.15
