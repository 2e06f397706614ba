"""Normality statistics for a collection of simulated estimates.

Covers the Jarque-Bera and Lilliefors tests (Monte Carlo p-values by
default), the bias/MSE t statistic for estimates of a known parameter, the
same statistic recomputed from published bias and RMSE, the ``t*`` check of
an approximate variance formula, and a two-term Edgeworth density.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from .rng import substream

__all__ = [
    "DegenerateDataError",
    "EdgeworthSpec",
    "MomentStats",
    "NormalityMethod",
    "NormalityReport",
    "PValueMethod",
    "SimulationSummary",
    "edgeworth_density",
    "jarque_bera",
    "jb_statistic",
    "lilliefors",
    "lilliefors_statistic",
    "moment_stats",
    "mse_bias_summary",
    "null_distribution",
    "t_star",
    "z_from_published",
]

DEFAULT_MC_REPS = 10_000
# seed for the cached null tables used when callers pass no rng
NULL_TABLE_SEED = 20_120_301
_NULL_CHUNK_ELEMS = 2_000_000


class DegenerateDataError(ValueError):
    """Input has zero variance or too few points for the statistic."""


class NormalityMethod(str, Enum):
    JARQUE_BERA = "jarque_bera"
    LILLIEFORS = "lilliefors"
    MSE_BIAS_T = "mse_bias_t"


class PValueMethod(str, Enum):
    MONTE_CARLO = "monte_carlo"
    ASYMPTOTIC = "asymptotic"
    EXACT = "exact"


@dataclass(frozen=True)
class NormalityReport:
    statistic: float
    pvalue: float
    method: NormalityMethod
    n: int
    pvalue_method: PValueMethod


class MomentStats(NamedTuple):
    mean: float
    variance: float
    skewness: float
    kurtosis: float


def _as_data(xs, min_n):
    x = np.asarray(xs, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a one-dimensional sequence")
    if x.size < min_n:
        raise DegenerateDataError(f"need at least {min_n} values, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("data contain non-finite values")
    return x


def moment_stats(xs) -> MomentStats:
    """Mean, variance, skewness and (raw, normal = 3) kurtosis, divisor ``n``."""
    x = _as_data(xs, 4)
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d * d)
    if not m2 > 0:
        raise DegenerateDataError("zero variance")
    m3 = np.mean(d ** 3)
    m4 = np.mean(d ** 4)
    return MomentStats(float(mean), float(m2), float(m3 / m2 ** 1.5), float(m4 / m2 ** 2))


# --- row-wise statistics (used for both observed data and null tables) ---

def jb_statistic(X):
    """Jarque-Bera statistic of each row of ``X`` (or of a 1-d sample)."""
    X = np.asarray(X, dtype=np.float64)
    one = X.ndim == 1
    X = np.atleast_2d(X)
    n = X.shape[1]
    d = X - X.mean(axis=1, keepdims=True)
    m2 = np.mean(d * d, axis=1)
    if np.any(~(m2 > 0)):
        raise DegenerateDataError("zero variance")
    skew = np.mean(d ** 3, axis=1) / m2 ** 1.5
    kurt = np.mean(d ** 4, axis=1) / m2 ** 2
    jb = n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)
    return float(jb[0]) if one else jb


def lilliefors_statistic(X):
    """Kolmogorov-Smirnov distance to the normal with fitted mean and sd.

    Both one-sided gaps of the empirical CDF are checked at every order
    statistic. The sd uses divisor ``n - 1``.
    """
    X = np.asarray(X, dtype=np.float64)
    one = X.ndim == 1
    X = np.atleast_2d(X)
    n = X.shape[1]
    sd = X.std(axis=1, ddof=1, keepdims=True)
    if np.any(~(sd > 0)):
        raise DegenerateDataError("zero variance")
    Z = np.sort((X - X.mean(axis=1, keepdims=True)) / sd, axis=1)
    F = special.ndtr(Z)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - F, axis=1)
    d_minus = np.max(F - (i - 1) / n, axis=1)
    d = np.maximum(d_plus, d_minus)
    return float(d[0]) if one else d


_STATISTICS = {
    NormalityMethod.JARQUE_BERA: jb_statistic,
    NormalityMethod.LILLIEFORS: lilliefors_statistic,
}


def _simulate_null(method, n, reps, rng):
    fn = _STATISTICS[method]
    out = np.empty(reps)
    chunk = max(1, _NULL_CHUNK_ELEMS // n)
    for start in range(0, reps, chunk):
        stop = min(reps, start + chunk)
        out[start:stop] = fn(rng.standard_normal((stop - start, n)))
    return out


@lru_cache(maxsize=64)
def _cached_null(method, n, reps, seed):
    table = _simulate_null(method, n, reps, substream(seed, "null", method.value, n, reps))
    table.setflags(write=False)
    return table


def null_distribution(method, n: int, reps: int = DEFAULT_MC_REPS, rng=None) -> np.ndarray:
    """Statistic values over ``reps`` standard-normal samples of size ``n``.

    ``rng=None`` or an integer seed gives a cached, reproducible table; a
    Generator draws a fresh one.
    """
    method = NormalityMethod(method)
    if reps < 1:
        raise ValueError("reps must be positive")
    if rng is None:
        return _cached_null(method, int(n), int(reps), NULL_TABLE_SEED)
    if isinstance(rng, (int, np.integer)):
        return _cached_null(method, int(n), int(reps), int(rng))
    return _simulate_null(method, int(n), int(reps), rng)


def _mc_pvalue(observed, null):
    return (1.0 + np.count_nonzero(null >= observed)) / (null.size + 1.0)


def jarque_bera(xs, pvalue_method=PValueMethod.MONTE_CARLO, mc_reps: int = DEFAULT_MC_REPS,
                rng=None) -> NormalityReport:
    """Jarque-Bera test; p-value by simulation or from the chi-square(2) tail."""
    x = _as_data(xs, 8)
    pvalue_method = PValueMethod(pvalue_method)
    jb = jb_statistic(x)
    if pvalue_method is PValueMethod.ASYMPTOTIC:
        p = float(stats.chi2.sf(jb, df=2))
    elif pvalue_method is PValueMethod.MONTE_CARLO:
        p = float(_mc_pvalue(jb, null_distribution(NormalityMethod.JARQUE_BERA, x.size, mc_reps, rng)))
    else:
        raise ValueError("Jarque-Bera supports monte_carlo or asymptotic p-values")
    return NormalityReport(jb, p, NormalityMethod.JARQUE_BERA, x.size, pvalue_method)


def lilliefors(xs, mc_reps: int = DEFAULT_MC_REPS, rng=None) -> NormalityReport:
    """Lilliefors test with a Monte Carlo p-value."""
    x = _as_data(xs, 5)
    d = lilliefors_statistic(x)
    p = float(_mc_pvalue(d, null_distribution(NormalityMethod.LILLIEFORS, x.size, mc_reps, rng)))
    return NormalityReport(d, p, NormalityMethod.LILLIEFORS, x.size, PValueMethod.MONTE_CARLO)


# --- bias / MSE statistics ------------------------------------------------

@dataclass(frozen=True)
class SimulationSummary:
    """Bias, MSE and the derived t statistic of ``m`` estimates of ``theta0``.

    ``S2`` uses divisor ``m - 1`` and ``mse`` divisor ``m``, so that
    ``m * mse == (m - 1) * S2 + m * bias**2``.
    """

    m: int
    theta0: float
    mean_est: float
    S2: float
    bias: float
    mse: float
    t: float
    z_pvalue: float

    @property
    def rmse(self) -> float:
        return float(np.sqrt(self.mse))

    def as_report(self) -> NormalityReport:
        return NormalityReport(abs(self.t), self.z_pvalue, NormalityMethod.MSE_BIAS_T,
                               self.m, PValueMethod.ASYMPTOTIC)


def _bias_t(bias, mse, m):
    spread = mse - bias * bias
    if not spread > 0:
        raise ValueError("MSE must exceed squared bias")
    return np.sqrt(m - 1.0) * bias / np.sqrt(spread)


def mse_bias_summary(estimates, theta0: float) -> SimulationSummary:
    """Summarize estimates of a known ``theta0``.

    ``t = sqrt(m - 1) * B / sqrt(MSE - B**2)`` equals ``sqrt(m) * B / S``; it
    is t-distributed with ``m - 1`` degrees of freedom when the estimates are
    normal and unbiased. The p-value is two-sided against the standard normal.
    ``estimates`` may be an :class:`~gpdnorm.estimators.EstimateBatch`.
    """
    if hasattr(estimates, "xi_hats"):
        estimates = estimates.xi_hats
    x = _as_data(estimates, 10)
    m = x.size
    mean = x.mean()
    bias = mean - theta0
    dev = x - theta0
    mse = np.mean(dev * dev)
    S2 = np.var(x, ddof=1)
    if np.ptp(x) == 0 or not S2 > 0:
        raise DegenerateDataError("degenerate batch: all estimates equal")
    try:
        t = _bias_t(bias, mse, m)
    except ValueError:
        raise DegenerateDataError("degenerate batch: MSE equals squared bias") from None
    p = 2.0 * stats.norm.sf(abs(t))
    return SimulationSummary(m, float(theta0), float(mean), float(S2), float(bias),
                             float(mse), float(t), float(p))


def z_from_published(bias: float, rmse: float, m: int, m_target: int = None):
    """The bias t statistic from a reported bias and RMSE.

    Returns ``(z, z_star)``; ``z_star`` rescales to ``m_target`` replicates
    and is ``None`` when no target is given.
    """
    if m < 2 or (m_target is not None and m_target < 2):
        raise ValueError("replicate counts must be at least 2")
    if not rmse > abs(bias):
        raise ValueError(f"rmse ({rmse}) must exceed |bias| ({abs(bias)})")
    z = float(_bias_t(bias, rmse * rmse, m))
    z_star = None if m_target is None else float(_bias_t(bias, rmse * rmse, m_target))
    return z, z_star


def t_star(ts) -> float:
    """``sqrt(m - 1) * mean(t) / sd(t)`` (sd with divisor ``m``).

    ``ts`` are standardized statistics ``(theta_j - theta0) / s_j`` built with
    an approximate standard error ``s_j``; the result is roughly standard
    normal when that standard error is right.
    """
    t = _as_data(ts, 10)
    m = t.size
    tbar = t.mean()
    St2 = np.mean((t - tbar) ** 2)
    if not St2 > 0:
        raise DegenerateDataError("zero variance")
    return float(np.sqrt(m - 1.0) * tbar / np.sqrt(St2))


# --- Edgeworth ------------------------------------------------------------

@dataclass(frozen=True)
class EdgeworthSpec:
    """Standardized third and fourth cumulants and the sample size."""

    rho3: float
    rho4: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")


def edgeworth_density(z, spec: EdgeworthSpec, return_flag: bool = False):
    """Normal density with the ``1/sqrt(n)`` and ``1/n`` Edgeworth terms.

    The result is not a true density and can dip below zero far in the
    tails. With ``return_flag=True`` a boolean (array) marking negative
    values is returned alongside.
    """
    z = np.asarray(z, dtype=np.float64)
    z2 = z * z
    h3 = z * (z2 - 3.0)
    h4 = z2 * (z2 - 6.0) + 3.0
    h6 = z2 * (z2 * (z2 - 15.0) + 45.0) - 15.0
    r3, r4, n = spec.rho3, spec.rho4, spec.n
    corr = 1.0 + r3 * h3 / (6.0 * np.sqrt(n)) + (3.0 * r4 * h4 + r3 * r3 * h6) / (72.0 * n)
    f = stats.norm.pdf(z) * corr
    f = f[()] if f.ndim == 0 else f
    if return_flag:
        return f, f < 0
    return f
