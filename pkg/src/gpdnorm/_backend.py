"""Kernel backend selection.

The compiled extension is used when importable; the numpy fallback otherwise.
Set ``GPDNORM_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("GPDNORM_BACKEND", "").lower() == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "compiled"
    except ImportError:  # extension not built
        kernels = _pykernels
        BACKEND = "python"

loglik_grid = kernels.loglik_grid
zs_batch = kernels.zs_batch
ml_batch = kernels.ml_batch

__all__ = ["BACKEND", "kernels", "loglik_grid", "zs_batch", "ml_batch"]
