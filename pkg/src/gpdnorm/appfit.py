"""Peaks-over-threshold tail fit of a price series.

Pipeline: closing prices -> log returns -> excesses over a threshold (or the
top ``k`` returns) -> GPD fits -> bootstrap confidence interval for the
shape and the implied lower bound on the tail index -> P-P plot pairs.
"""

import csv
import datetime as dt
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimators import Method, bootstrap_sd, estimate, DEFAULT_BOOTSTRAP_REPS
from .gpd import GpdParams, gpd_cdf
from .rng import as_generator

__all__ = [
    "InsufficientExceedancesError",
    "PriceFileError",
    "PriceSeries",
    "ReturnSeries",
    "TailFit",
    "confidence_interval",
    "exceedances",
    "fit_tail",
    "load_price_csv",
    "log_returns",
    "pp_plot_data",
]

MIN_EXCEEDANCES = 10


class PriceFileError(ValueError):
    """Unreadable or inconsistent price file."""


class InsufficientExceedancesError(ValueError):
    pass


@dataclass
class PriceSeries:
    timestamps: list
    prices: np.ndarray

    def __len__(self):
        return len(self.prices)


@dataclass
class ReturnSeries:
    timestamps: list
    returns: np.ndarray

    def __len__(self):
        return len(self.returns)


def _parse_when(text):
    text = text.strip()
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        return dt.datetime.fromisoformat(text)


def load_price_csv(path, date_col: str = "Date", price_col: str = "Close",
                   delimiter: str = ",") -> PriceSeries:
    """Read dated closing prices, returned in ascending date order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise PriceFileError(f"{path}: empty file")
        header = [h.strip() for h in header]
        try:
            di = header.index(date_col)
            pi = header.index(price_col)
        except ValueError:
            raise PriceFileError(
                f"{path}, line 1: header needs columns {date_col!r} and {price_col!r}") from None
        rows = []
        seen = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= max(di, pi):
                raise PriceFileError(f"{path}, line {line}: too few fields")
            try:
                when = _parse_when(row[di])
            except ValueError:
                raise PriceFileError(f"{path}, line {line}: bad date {row[di]!r}") from None
            try:
                price = float(row[pi])
            except ValueError:
                raise PriceFileError(f"{path}, line {line}: bad price {row[pi]!r}") from None
            if not (np.isfinite(price) and price > 0):
                raise PriceFileError(f"{path}, line {line}: price must be positive")
            if when in seen:
                raise PriceFileError(
                    f"{path}, line {line}: duplicate date {when} (first on line {seen[when]})")
            seen[when] = line
            rows.append((when, price))
    if not rows:
        raise PriceFileError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    return PriceSeries([r[0] for r in rows], np.array([r[1] for r in rows]))


def log_returns(prices) -> ReturnSeries:
    """``log(P_t / P_{t-1})``, stamped with the later date."""
    if isinstance(prices, PriceSeries):
        stamps, p = prices.timestamps, prices.prices
    else:
        p = np.asarray(prices, dtype=np.float64)
        stamps = list(range(len(p)))
    if len(p) < 2:
        raise ValueError("need at least two prices")
    if np.any(~(p > 0)):
        raise ValueError("prices must be positive")
    r = np.diff(np.log(p))
    return ReturnSeries(list(stamps[1:]), r)


def exceedances(returns, top_k: int = None, threshold: float = None):
    """Excesses ``r - u`` of the returns strictly above ``u``, sorted ascending.

    With ``top_k`` the threshold is the ``(k+1)``-th largest return; with
    ``threshold`` it is given. Exactly one of the two must be set.
    Returns ``(excesses, u)``.
    """
    r = np.asarray(returns.returns if isinstance(returns, ReturnSeries) else returns,
                   dtype=np.float64)
    if (top_k is None) == (threshold is None):
        raise ValueError("give exactly one of top_k or threshold")
    if top_k is not None:
        if top_k < MIN_EXCEEDANCES:
            raise InsufficientExceedancesError(f"top_k must be at least {MIN_EXCEEDANCES}")
        if top_k >= r.size:
            raise InsufficientExceedancesError(
                f"top_k = {top_k} needs more than {top_k} returns, got {r.size}")
        u = float(np.sort(r)[-(top_k + 1)])
    else:
        u = float(threshold)
    exc = np.sort(r[r > u] - u)
    if exc.size < MIN_EXCEEDANCES:
        raise InsufficientExceedancesError(
            f"{exc.size} returns above {u:g}; at least {MIN_EXCEEDANCES} required")
    return exc, u


def confidence_interval(xi_hat: float, sd: float, confidence: float = 0.95):
    """Normal-theory interval ``xi_hat -/+ z * sd``."""
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if sd < 0:
        raise ValueError("sd must be nonnegative")
    z = stats.norm.ppf(0.5 * (1.0 + confidence))
    return xi_hat - z * sd, xi_hat + z * sd


def tail_index_bound(ci_hi: float) -> float:
    """Smallest tail index compatible with the interval, ``1 / ci_hi``."""
    return 1.0 / ci_hi if ci_hi > 0 else float("inf")


@dataclass
class TailFit:
    threshold: float
    k: int
    method: Method
    fits: dict
    xi_hat: float
    sigma_hat: float
    bootstrap_sd: float
    bootstrap_reps: int
    confidence: float
    ci95: tuple
    index_lower_bound: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "k": self.k,
            "method": self.method.value,
            "fits": {m.value: {"xi": r.xi_hat, "sigma": r.sigma_hat, "converged": r.converged}
                     for m, r in self.fits.items()},
            "xi_hat": self.xi_hat,
            "sigma_hat": self.sigma_hat,
            "bootstrap_sd": self.bootstrap_sd,
            "bootstrap_reps": self.bootstrap_reps,
            "confidence": self.confidence,
            "ci": list(self.ci95),
            "index_lower_bound": self.index_lower_bound,
            **self.extra,
        }


def fit_tail(sample, method=Method.ZS, bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
             rng=None, confidence: float = 0.95, threshold: float = float("nan")) -> TailFit:
    """Fit all three estimators and build the bootstrap interval for ``method``."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    method = Method.parse(method)
    fits = {m: estimate(x, m) for m in Method}
    chosen = fits[method]
    sd = bootstrap_sd(x, method, reps=bootstrap_reps, rng=as_generator(rng))
    lo, hi = confidence_interval(chosen.xi_hat, sd, confidence)
    return TailFit(
        threshold=float(threshold),
        k=int(x.size),
        method=method,
        fits=fits,
        xi_hat=chosen.xi_hat,
        sigma_hat=chosen.sigma_hat,
        bootstrap_sd=sd,
        bootstrap_reps=bootstrap_reps,
        confidence=confidence,
        ci95=(lo, hi),
        index_lower_bound=tail_index_bound(hi),
    )


def pp_plot_data(sample, p: GpdParams) -> np.ndarray:
    """``(empirical, model)`` probability pairs, one row per order statistic.

    Empirical positions are ``(i - 0.5) / n``.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n < 1:
        raise ValueError("empty sample")
    emp = (np.arange(1, n + 1) - 0.5) / n
    return np.column_stack([emp, gpd_cdf(x, p)])
