"""Seeded Monte Carlo studies of the shape estimators.

Three studies are provided:

* :func:`run_normality_grid` simulates ``m`` samples per sample size, fits
  each estimator and tests the ``m`` estimates for normality (Jarque-Bera,
  Lilliefors, bias t statistic).
* :func:`run_rejection_study` tests ``H0: xi = xi0`` on every replicate with a
  bootstrap standard error and reports the 5% rejection rate.
* :func:`audit_published` recomputes the bias t statistic from published
  bias/RMSE tables.

Each simulated three-parameter sample is moved to the two-parameter model by
subtracting its minimum; the estimators see the ``n - 1`` strictly positive
excesses (``keep_minimum=True`` keeps the zero as well).

Replicate ``j`` of sample size ``n`` draws from a stream keyed by
``(master_seed, xi0, sigma0, mu0, n, j)``. Results therefore do not depend on
``m``, on the thread count, or on which methods are run.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .estimators import (DEFAULT_BOOTSTRAP_REPS, BootstrapError, DegenerateSampleError,
                         Method, bootstrap_sd, fit_batch)
from .gpd import GpdParams, sample_gpd, shift_to_two_param
from .normtest import (DEFAULT_MC_REPS, SimulationSummary, jarque_bera, lilliefors,
                       moment_stats, mse_bias_summary, z_from_published)
from .rng import substream

__all__ = [
    "AuditInputError",
    "AuditRow",
    "CellFailure",
    "CellResult",
    "ExperimentConfig",
    "HOSKING_WALLIS_1987_ROWS",
    "RejectionResult",
    "audit_published",
    "read_audit_rows",
    "run_normality_grid",
    "run_rejection_study",
    "simulate_cell",
]

log = logging.getLogger(__name__)

Z_CRIT_5PCT = 1.959964

# Bias and RMSE of shape estimates reported by Hosking & Wallis (1987),
# xi = 0.4, sigma = 1, 50000 replicates: (label, n, bias, rmse, m).
HOSKING_WALLIS_1987_ROWS = (
    ("ML", 15, 0.16, 0.46, 50000),
    ("ML", 50, 0.05, 0.22, 50000),
    ("ML", 100, 0.02, 0.15, 50000),
    ("MOM", 15, 0.30, 0.38, 50000),
    ("MOM", 50, 0.17, 0.21, 50000),
    ("MOM", 100, 0.13, 0.13, 50000),
    ("PWM", 15, 0.18, 0.36, 50000),
    ("PWM", 50, 0.07, 0.19, 50000),
    ("PWM", 100, 0.04, 0.14, 50000),
)


class CellFailure(RuntimeError):
    """Too many replicates of one cell failed to produce an estimate."""


@dataclass(frozen=True)
class ExperimentConfig:
    xi0: float
    sigma0: float = 1.0
    mu0: float = 1.0
    sample_sizes: tuple = (25, 50, 100, 250, 500)
    methods: tuple = (Method.PWM, Method.ZS, Method.ML)
    m: int = 1000
    mc_pvalue_reps: int = DEFAULT_MC_REPS
    bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS
    master_seed: int = None
    max_failure_rate: float = 0.05
    keep_minimum: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "methods", tuple(Method.parse(x) for x in self.methods))
        if self.master_seed is None:
            raise ValueError("master_seed must be given explicitly")
        if self.m < 100:
            raise ValueError("m must be at least 100")
        if any(n < 10 for n in self.sample_sizes):
            raise ValueError("sample sizes must be at least 10")
        if not self.methods:
            raise ValueError("at least one method is required")
        GpdParams(self.xi0, self.sigma0, self.mu0).check_heavy_tailed()

    @property
    def params(self) -> GpdParams:
        return GpdParams(self.xi0, self.sigma0, self.mu0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_sizes"] = list(self.sample_sizes)
        d["methods"] = [x.value for x in self.methods]
        return d


@dataclass(frozen=True)
class CellResult:
    n: int
    method: Method
    jb_pvalue: float
    lilliefors_pvalue: float
    t_stat: float
    t_pvalue: float
    skewness: float
    kurtosis: float
    summary: SimulationSummary
    failures: int = 0


@dataclass(frozen=True)
class RejectionResult:
    n: int
    mean_z: float
    var_z: float
    reject_rate_5pct: float
    used: int
    failures: int = 0


@dataclass(frozen=True)
class AuditRow:
    label: str
    n: int
    z: float
    z_star: Optional[float] = None


# --- sampling -------------------------------------------------------------

def _replicate_stream(cfg, tag, n, j):
    return substream(cfg.master_seed, tag, cfg.xi0, cfg.sigma0, cfg.mu0, n, j)


def simulate_cell(cfg: ExperimentConfig, n: int, start: int = 0, stop: int = None) -> np.ndarray:
    """Fitting samples for replicates ``start .. stop - 1``, one per row.

    Rows hold the ``n - 1`` sorted excesses over the sample minimum, or all
    ``n`` shifted values when ``cfg.keep_minimum`` is set.
    """
    stop = cfg.m if stop is None else stop
    p = cfg.params
    width = n if cfg.keep_minimum else n - 1
    X = np.empty((stop - start, width))
    for row, j in enumerate(range(start, stop)):
        shifted, _ = shift_to_two_param(sample_gpd(n, p, _replicate_stream(cfg, "sample", n, j)))
        shifted.sort()
        X[row] = shifted if cfg.keep_minimum else shifted[1:]
    return X


def _map(fn, items, threads):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _check_failures(cfg, failures, total, what):
    if failures > cfg.max_failure_rate * total:
        raise CellFailure(f"{what}: {failures} of {total} replicates failed")


# --- normality grid --------------------------------------------------------

def run_normality_grid(cfg: ExperimentConfig, threads: int = 1,
                       fitters: Optional[dict] = None) -> list:
    """One :class:`CellResult` per (sample size, method), sizes outermost.

    ``fitters`` optionally maps a method to ``f(samples, rng) -> estimates``
    in place of the built-in estimator (used to feed synthetic estimates
    through the same pipeline).
    """
    fitters = {Method.parse(k): v for k, v in (fitters or {}).items()}

    def one_size(n):
        X = simulate_cell(cfg, n)
        cells = []
        for method in cfg.methods:
            if method in fitters:
                est = np.asarray(fitters[method](X, _replicate_stream(cfg, "fit-" + method.value, n, -1)),
                                 dtype=np.float64)
                ok = np.isfinite(est)
            else:
                est, _, ok = fit_batch(X, method)
            failures = int((~ok).sum())
            _check_failures(cfg, failures, cfg.m, f"n={n} method={method.value}")
            cells.append(_summarize_cell(cfg, n, method, est[ok], failures))
        return cells

    out = []
    for cells in _map(one_size, cfg.sample_sizes, threads):
        out.extend(cells)
    return out


def _summarize_cell(cfg, n, method, est, failures):
    jb = jarque_bera(est, mc_reps=cfg.mc_pvalue_reps, rng=cfg.master_seed)
    lf = lilliefors(est, mc_reps=cfg.mc_pvalue_reps, rng=cfg.master_seed)
    summary = mse_bias_summary(est, cfg.xi0)
    mom = moment_stats(est)
    log.debug("n=%d %s: t=%.4f jb_p=%.4f lf_p=%.4f", n, method.value, summary.t,
              jb.pvalue, lf.pvalue)
    return CellResult(n, method, jb.pvalue, lf.pvalue, summary.t, summary.z_pvalue,
                      mom.skewness, mom.kurtosis, summary, failures)


# --- bootstrap rejection study --------------------------------------------

def _default_estimate(x, rng):
    xi, _, ok = fit_batch(x[None, :], Method.ZS)
    return float(xi[0]) if ok[0] else math.nan


def run_rejection_study(cfg: ExperimentConfig, threads: int = 1,
                        estimate_fn: Optional[Callable] = None,
                        sd_fn: Optional[Callable] = None) -> list:
    """Rejection rate of ``|z| > 1.959964`` with ``z = (xi_hat - xi0) / sd_boot``.

    Each replicate fits the shape with ``cfg.methods[0]`` (ZS by default in
    the classic protocol) and a bootstrap sd with ``cfg.bootstrap_reps``
    resamples. ``estimate_fn(x, rng)`` and ``sd_fn(x, rng)`` replace the
    estimator and the bootstrap. Failed replicates are dropped and counted.
    """
    method = cfg.methods[0]
    if estimate_fn is None:
        if method is Method.ZS:
            estimate_fn = _default_estimate
        else:
            def estimate_fn(x, rng, _m=method):
                xi, _, ok = fit_batch(x[None, :], _m)
                return float(xi[0]) if ok[0] else math.nan
    if sd_fn is None:
        def sd_fn(x, rng):
            return bootstrap_sd(x, method, reps=cfg.bootstrap_reps, rng=rng)

    def one_replicate(args):
        n, j = args
        x = simulate_cell(cfg, n, j, j + 1)[0]
        rng = _replicate_stream(cfg, "boot", n, j)
        try:
            xi_hat = estimate_fn(x, rng)
            if not math.isfinite(xi_hat):
                return math.nan
            sd = sd_fn(x, rng)
        except (BootstrapError, DegenerateSampleError):
            return math.nan
        if not sd > 0:
            return math.nan
        return (xi_hat - cfg.xi0) / sd

    results = []
    for n in cfg.sample_sizes:
        z = np.array(_map(one_replicate, [(n, j) for j in range(cfg.m)], threads))
        ok = np.isfinite(z)
        failures = int((~ok).sum())
        _check_failures(cfg, failures, cfg.m, f"n={n} rejection study")
        zk = z[ok]
        results.append(RejectionResult(
            n=n,
            mean_z=float(zk.mean()),
            var_z=float(zk.var(ddof=1)),
            reject_rate_5pct=float(np.mean(np.abs(zk) > Z_CRIT_5PCT)),
            used=int(zk.size),
            failures=failures,
        ))
        log.info("xi0=%g n=%d: mean z %.4f var z %.4f rejected %.1f%%", cfg.xi0, n,
                 results[-1].mean_z, results[-1].var_z, 100 * results[-1].reject_rate_5pct)
    return results


# --- published-results audit ---------------------------------------------

class AuditInputError(ValueError):
    """Malformed audit input; the message names the offending line."""


def audit_published(rows, m_target: Optional[int] = None) -> list:
    """Bias t statistic (and its rescaling to ``m_target``) per published row.

    ``rows`` holds ``(label, n, bias, rmse, m)`` tuples. Pure arithmetic.
    """
    out = []
    for label, n, bias, rmse, m in rows:
        z, z_star = z_from_published(float(bias), float(rmse), int(m), m_target)
        out.append(AuditRow(str(label), int(n), z, z_star))
    return out


def read_audit_rows(path) -> list:
    """Read ``label,n,bias,rmse,m`` rows from a delimited file with a header."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise AuditInputError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        expected = ["label", "n", "bias", "rmse", "m"]
        if header != expected:
            raise AuditInputError(f"{path}, line 1: header must be {','.join(expected)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 5:
                raise AuditInputError(f"{path}, line {line}: expected 5 fields, got {len(row)}")
            label, n, bias, rmse, m = (c.strip() for c in row)
            try:
                n, m = int(n), int(m)
                bias, rmse = float(bias), float(rmse)
            except ValueError:
                raise AuditInputError(f"{path}, line {line}: non-numeric field") from None
            if not rmse > abs(bias):
                raise AuditInputError(f"{path}, line {line}: rmse must exceed |bias|")
            if m < 2:
                raise AuditInputError(f"{path}, line {line}: m must be at least 2")
            rows.append((label, n, bias, rmse, m))
    return rows
