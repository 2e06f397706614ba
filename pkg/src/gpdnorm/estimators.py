"""Shape-parameter estimators for the two-parameter GPD.

Three estimators are provided: probability weighted moments (PWM), profile
maximum likelihood (ML) and the Zhang-Stephens likelihood-weighted grid
estimator (ZS). ML and ZS share one profile likelihood, written in terms of
``b = -xi / sigma``:

    k(b) = -mean(log(1 - b x))
    l(b) = n (log(b / k(b)) + k(b) - 1)

so that ``xi = -k(b)`` and ``sigma = k(b) / b``. A heavy tail (``xi > 0``)
always corresponds to ``b < 0``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _backend
from .gpd import GpdParams
from .rng import as_generator

__all__ = [
    "BootstrapError",
    "DegenerateSampleError",
    "EstimateBatch",
    "EstimateRecord",
    "Method",
    "bootstrap_sd",
    "estimate",
    "estimate_ml",
    "estimate_pwm",
    "estimate_zs",
    "fit_batch",
    "profile_loglik",
    "zs_grid",
    "zs_weights",
]

PWM_PLOTTING_OFFSET = 0.35
DEFAULT_BOOTSTRAP_REPS = 1000
_BOOT_CHUNK_ELEMS = 2_000_000


class DegenerateSampleError(ValueError):
    """Sample carries too little information for the requested fit."""


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates failed to produce an estimate."""


class Method(str, Enum):
    PWM = "pwm"
    ML = "ml"
    ZS = "zs"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected pwm, ml or zs") from None


@dataclass(frozen=True)
class EstimateRecord:
    xi_hat: float
    sigma_hat: float
    method: Method
    converged: bool = True


@dataclass
class EstimateBatch:
    """The ``m`` replicate estimates of one method at one ``(n, true params)``."""

    records: list
    n: int
    true_params: GpdParams
    method: Method
    failures: int = field(default=0)

    def __post_init__(self):
        if len(self.records) < 2:
            raise ValueError("a batch needs at least two records")
        if any(r.method != self.method for r in self.records):
            raise ValueError("all records must share the batch method")

    @property
    def m(self) -> int:
        return len(self.records)

    @property
    def xi_hats(self) -> np.ndarray:
        return np.array([r.xi_hat for r in self.records])


def _as_sample(x, min_n=2) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("sample must be one-dimensional")
    if x.size < min_n:
        raise DegenerateSampleError(f"need at least {min_n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return x


def _check_spread(x):
    if x.max() == x.min():
        raise DegenerateSampleError("all observations are equal")


def profile_loglik(b: float, x) -> float:
    """Profile log-likelihood ``l(b)``; ``b = 0`` gives the exponential limit."""
    x = _as_sample(x)
    if np.any(x < 0):
        raise ValueError("profile likelihood needs nonnegative data")
    xmax = x.max()
    if xmax > 0 and b >= 1.0 / xmax:
        raise ValueError(f"b must be below 1 / max(x) = {1.0 / xmax}")
    val = float(_backend.loglik_grid(x, np.array([b], dtype=np.float64))[0])
    if np.isnan(val):
        raise FloatingPointError("k(b) and b have opposite signs")
    return val


# --- PWM ----------------------------------------------------------------

def _pwm_rows(X: np.ndarray):
    S = np.sort(X, axis=1)
    n = S.shape[1]
    j = np.arange(1, n + 1)
    a0 = S.mean(axis=1)
    a1 = S @ (1.0 - (j - PWM_PLOTTING_OFFSET) / n) / n
    den = a0 - 2.0 * a1
    bad = ~(np.abs(den) > 1e-12 * np.abs(a0))
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = 2.0 - a0 / den
        sigma = 2.0 * a0 * a1 / den
    xi[bad] = np.nan
    sigma[bad] = np.nan
    conv = np.isfinite(xi) & np.isfinite(sigma) & (sigma > 0)
    return xi, sigma, conv


def estimate_pwm(x) -> EstimateRecord:
    """Probability weighted moments with plotting positions ``(j - 0.35) / n``.

    >>> r = estimate_pwm([1.0, 2.0, 4.0])
    >>> round(r.xi_hat, 4), round(r.sigma_hat, 4)
    (-0.5926, 3.716)
    """
    x = _as_sample(x, min_n=3)
    _check_spread(x)
    xi, sigma, conv = _pwm_rows(x[None, :])
    if np.isnan(xi[0]):
        raise DegenerateSampleError("PWM denominator a0 - 2 a1 vanishes")
    return EstimateRecord(float(xi[0]), float(sigma[0]), Method.PWM, bool(conv[0]))


# --- ML -----------------------------------------------------------------

def _ml_rows(X: np.ndarray):
    _, xi, sigma, status = _backend.ml_batch(np.ascontiguousarray(X, dtype=np.float64))
    conv = (status == 0) | (status == 4)
    conv &= np.isfinite(xi) & (sigma > 0)
    return xi, sigma, conv


def estimate_ml(x) -> EstimateRecord:
    """Maximize the profile likelihood over ``b``.

    A 200-point grid (uniform in ``log(1 - b max(x))``) locates the peak and
    bisection on the analytic score refines it. The search stops at
    ``xi = -1``, beyond which the likelihood is unbounded; landing on that
    edge or on the lower end of the grid flags ``converged=False``.
    """
    x = _as_sample(x, min_n=3)
    _check_spread(x)
    if np.any(x < 0):
        raise ValueError("ML fit expects nonnegative (two-parameter) data")
    xi, sigma, conv = _ml_rows(x[None, :])
    if np.isnan(xi[0]):
        raise DegenerateSampleError("no finite profile likelihood on the search grid")
    return EstimateRecord(float(xi[0]), float(sigma[0]), Method.ML, bool(conv[0]))


# --- Zhang-Stephens -----------------------------------------------------

def _quartile_index(n: int) -> int:
    """1-based rank of the first-quartile order statistic used by ZS."""
    return max(1, int(np.floor(n / 4.0 + 0.5)))


def zs_grid_size(n: int) -> int:
    return 20 + int(np.floor(np.sqrt(n)))


def zs_grid(x) -> np.ndarray:
    """Grid points ``b_j`` of the ZS estimator for sample ``x``."""
    x = np.sort(_as_sample(x, min_n=2))
    n = x.size
    xq = x[_quartile_index(n) - 1]
    if not (x[-1] > 0 and xq > 0):
        raise DegenerateSampleError("ZS needs a positive maximum and first quartile")
    mg = zs_grid_size(n)
    j = np.arange(1, mg + 1)
    return 1.0 / x[-1] + (1.0 - np.sqrt(mg / (j - 0.5))) / (3.0 * xq)


def zs_weights(x):
    """Grid and normalized likelihood weights, ``(b, w)``."""
    x = _as_sample(x)
    b = zs_grid(x)
    L = _backend.loglik_grid(x, b)
    w = np.exp(L - np.nanmax(L))
    w[np.isnan(w)] = 0.0
    return b, w / w.sum()


def _zs_rows(X: np.ndarray):
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[1]
    q = _quartile_index(n) - 1
    P = np.partition(X, [q, n - 1], axis=1)
    xq = np.ascontiguousarray(P[:, q])
    xmax = np.ascontiguousarray(P[:, n - 1])
    _, xi, sigma = _backend.zs_batch(X, xmax, xq)
    conv = np.isfinite(xi) & np.isfinite(sigma) & (sigma > 0)
    return xi, sigma, conv


def estimate_zs(x) -> EstimateRecord:
    """Zhang-Stephens estimator: likelihood-weighted mean of a fixed ``b`` grid.

    The grid has ``20 + floor(sqrt(n))`` points anchored at ``1 / max(x)``
    and scaled by the first-quartile order statistic. No iteration is
    involved, so the fit always succeeds on a non-degenerate sample.
    """
    x = _as_sample(x, min_n=5)
    _check_spread(x)
    xs = np.sort(x)
    if not (xs[-1] > 0 and xs[_quartile_index(x.size) - 1] > 0):
        raise DegenerateSampleError("ZS needs a positive maximum and first quartile")
    xi, sigma, conv = _zs_rows(x[None, :])
    return EstimateRecord(float(xi[0]), float(sigma[0]), Method.ZS, bool(conv[0]))


_ROW_FITTERS = {Method.PWM: _pwm_rows, Method.ML: _ml_rows, Method.ZS: _zs_rows}
_SINGLE_FITTERS = {Method.PWM: estimate_pwm, Method.ML: estimate_ml, Method.ZS: estimate_zs}


def estimate(x, method) -> EstimateRecord:
    return _SINGLE_FITTERS[Method.parse(method)](x)


def fit_batch(X, method):
    """Fit every row of the 2-d array ``X``.

    Returns ``(xi, sigma, converged)`` arrays. Failed rows carry
    ``converged=False`` instead of raising, so Monte Carlo loops keep going.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("fit_batch expects a 2-d array, one sample per row")
    return _ROW_FITTERS[Method.parse(method)](X)


def bootstrap_sd(x, method, reps: int = DEFAULT_BOOTSTRAP_REPS, rng=None,
                 max_failure_rate: float = 0.10) -> float:
    """Bootstrap standard deviation (divisor ``reps - 1``) of the shape estimate.

    ``method`` is a :class:`Method` (or its name) or a callable mapping one
    resample to a shape estimate. Non-converged replicates are skipped; more
    than ``max_failure_rate`` of them raises :class:`BootstrapError`.
    """
    x = _as_sample(x, min_n=5)
    _check_spread(x)
    if reps < 2:
        raise ValueError("reps must be at least 2")
    if rng is None:
        raise TypeError("bootstrap_sd needs an explicit rng or seed")
    rng = as_generator(rng)
    n = x.size
    chunk = max(1, _BOOT_CHUNK_ELEMS // n)
    est = np.empty(reps)
    ok = np.empty(reps, dtype=bool)
    for start in range(0, reps, chunk):
        stop = min(reps, start + chunk)
        R = x[rng.integers(0, n, size=(stop - start, n))]
        if callable(method) and not isinstance(method, (str, Method)):
            vals = np.array([method(row) for row in R], dtype=np.float64)
            good = np.isfinite(vals)
        else:
            vals, _, good = fit_batch(R, method)
        est[start:stop] = vals
        ok[start:stop] = good
    failed = reps - int(ok.sum())
    if failed > max_failure_rate * reps:
        raise BootstrapError(f"{failed} of {reps} bootstrap replicates failed")
    kept = est[ok]
    if kept.size < 2:
        raise BootstrapError("fewer than two usable bootstrap replicates")
    return float(np.std(kept, ddof=1))
