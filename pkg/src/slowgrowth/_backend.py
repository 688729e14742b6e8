"""Select the compiled kernels when available, else the numpy fallback."""
from __future__ import annotations

import os

from . import _pykernels

FORCE_PYTHON = os.environ.get("SLOWGROWTH_PURE_PYTHON", "").strip() not in ("", "0")

if FORCE_PYTHON:
    kernels = _pykernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels

BACKEND: str = kernels.BACKEND
