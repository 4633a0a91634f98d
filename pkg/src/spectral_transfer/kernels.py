"""Backend selection for the Kennard-Stone kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback. Setting ``SPECTRAL_TRANSFER_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _ks_py as python_backend

try:
    from . import _ks_ext as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("SPECTRAL_TRANSFER_PURE_PYTHON", "") in ("", "0"):
    backend = compiled_backend
    BACKEND = "cython"
else:
    backend = python_backend
    BACKEND = "python"

max_distance_pair = backend.max_distance_pair
maximin_select = backend.maximin_select
