"""Shape estimation for the heavy-tailed generalized Pareto distribution and
Monte Carlo tools for checking whether the estimators are normally distributed.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .estimators import (BootstrapError, DegenerateSampleError, EstimateBatch, EstimateRecord,
                         Method, bootstrap_sd, estimate, estimate_ml, estimate_pwm, estimate_zs,
                         fit_batch, profile_loglik)
from .gpd import (GpdDomainError, GpdParams, excesses_over_minimum, gpd_cdf, gpd_quantile,
                  sample_gpd, shift_to_two_param)
from .normtest import (EdgeworthSpec, NormalityReport, SimulationSummary, edgeworth_density,
                       jarque_bera, lilliefors, mse_bias_summary, t_star, z_from_published)
from .rng import substream

__all__ = [
    "BACKEND", "BootstrapError", "DegenerateSampleError", "EdgeworthSpec", "EstimateBatch",
    "EstimateRecord", "GpdDomainError", "GpdParams", "Method", "NormalityReport",
    "SimulationSummary", "bootstrap_sd", "edgeworth_density", "estimate", "estimate_ml",
    "estimate_pwm", "estimate_zs", "excesses_over_minimum", "fit_batch", "gpd_cdf",
    "gpd_quantile", "jarque_bera", "lilliefors", "mse_bias_summary", "profile_loglik",
    "sample_gpd", "shift_to_two_param", "substream", "t_star", "z_from_published",
]
