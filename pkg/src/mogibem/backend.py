"""Select the panel-integration backend at import time.

The compiled extension is preferred; set ``MOGIBEM_BACKEND=python`` to force
the numpy fallback (used by the benchmark and the cross-backend tests).
"""
from __future__ import annotations

import importlib
import os
import warnings

from . import _core_py

_requested = os.environ.get("MOGIBEM_BACKEND", "auto").strip().lower()


def load(name: str):
    """Return the backend module called ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _core_py
    if name == "compiled":
        return importlib.import_module("mogibem._core")
    raise ValueError(f"unknown backend {name!r}")


if _requested == "python":
    core = _core_py
    NAME = "python"
else:
    try:
        core = load("compiled")
        NAME = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        warnings.warn("compiled kernels unavailable; using the numpy fallback", RuntimeWarning)
        core = _core_py
        NAME = "python"
