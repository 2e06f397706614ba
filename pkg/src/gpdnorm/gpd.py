"""Generalized Pareto distribution: CDF, quantile, sampling and the
three-to-two parameter shift.

Only the heavy-tailed branch (shape ``xi > 0``) is modelled:

    F(x) = 1 - (1 + (xi / sigma) * (x - mu)) ** (-1 / xi),   x >= mu
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GpdDomainError",
    "GpdParams",
    "gpd_cdf",
    "gpd_quantile",
    "sample_gpd",
    "excesses_over_minimum",
    "shift_to_two_param",
]

_TINY = np.finfo(np.float64).tiny


class GpdDomainError(ValueError):
    """Argument outside the support or parameter space of the GPD."""


@dataclass(frozen=True)
class GpdParams:
    """Shape ``xi``, scale ``sigma`` and location ``mu``.

    Estimation output may carry ``xi <= 0``; only evaluation and sampling
    require ``xi > 0``.
    """

    xi: float
    sigma: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise GpdDomainError(f"sigma must be positive, got {self.sigma}")

    @property
    def tail_index(self) -> float:
        """Tail index ``1 / xi``; moments of order below it are finite."""
        if self.xi == 0:
            raise GpdDomainError("tail index undefined for xi = 0")
        return 1.0 / self.xi

    def check_heavy_tailed(self):
        if not self.xi > 0:
            raise GpdDomainError(f"xi must be positive here, got {self.xi}")


def gpd_cdf(x, p: GpdParams):
    """Distribution function at ``x`` (scalar or array)."""
    p.check_heavy_tailed()
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < p.mu) or np.any(np.isnan(x)):
        raise GpdDomainError(f"x must be >= mu = {p.mu}")
    z = (p.xi / p.sigma) * (x - p.mu)
    # 1 + z >= 1 on the support; log1p keeps accuracy just above mu
    if np.any(1.0 + z < _TINY):
        raise GpdDomainError("1 + xi (x - mu) / sigma underflowed")
    out = -np.expm1(-np.log1p(z) / p.xi)
    return out[()] if out.ndim == 0 else out


def gpd_quantile(prob, p: GpdParams):
    """Inverse of :func:`gpd_cdf`; ``prob`` must lie in ``[0, 1)``."""
    p.check_heavy_tailed()
    prob = np.asarray(prob, dtype=np.float64)
    if np.any(~((prob >= 0.0) & (prob < 1.0))):
        raise GpdDomainError("prob must lie in [0, 1)")
    out = p.mu + (p.sigma / p.xi) * np.expm1(-p.xi * np.log1p(-prob))
    return out[()] if out.ndim == 0 else out


def sample_gpd(n: int, p: GpdParams, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` values by inverse transform, one uniform per draw.

    Values come back in draw order; sort them for order statistics.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p.check_heavy_tailed()
    u = rng.random(n)
    return gpd_quantile(u, p)


def shift_to_two_param(values):
    """Subtract the sample minimum.

    Returns ``(shifted, location_estimate)``; the shifted minimum is exactly 0.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d sample with at least two values")
    loc = float(x.min())
    return x - loc, loc


def excesses_over_minimum(values) -> np.ndarray:
    """Strictly positive excesses over the sample minimum.

    The shifted sample without its zero(s): the ``n - 1`` (for distinct
    values) exceedances of the estimated location, which follow a
    two-parameter GPD with the same shape.
    """
    shifted, _ = shift_to_two_param(values)
    return shifted[shifted > 0]
