"""Backend selection for the hot fusion kernels.

The compiled extension is used when it imports; ``SKIT_PURE_PYTHON=1``
forces the numpy implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
occluded = _kernels_py.occluded

if not os.environ.get("SKIT_PURE_PYTHON"):
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        occluded = _kernels.occluded
        BACKEND = "cython"


def available_backends() -> dict:
    out = {"python": _kernels_py.occluded}
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return out
    out["cython"] = _kernels.occluded
    return out
