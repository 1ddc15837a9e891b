"""Numerical kernels with a compiled core and a pure-Python fallback.

The compiled extension ``_core`` is preferred when importable. Setting
``MESHROUTE_PURE_PYTHON=1`` forces the fallback, which is also what the
benchmark and the cross-check tests use to compare both backends.
"""
import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _core
except ImportError:  # extension not built
    _core = None
else:
    BACKENDS["cython"] = _core

if _core is not None and os.environ.get("MESHROUTE_PURE_PYTHON", "") in ("", "0"):
    backend = _core
    BACKEND_NAME = "cython"
else:
    backend = _fallback
    BACKEND_NAME = "python"

bfs_multi = backend.bfs_multi
prox_discrete = backend.prox_discrete
project_disks = backend.project_disks

__all__ = ["BACKENDS", "BACKEND_NAME", "bfs_multi", "prox_discrete", "project_disks"]
