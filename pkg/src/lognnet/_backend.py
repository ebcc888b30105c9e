"""Kernel backend selection.

The compiled extension is preferred; set ``LOGNNET_PURE_PYTHON=1`` to force
the numpy fallback (the test suite does this to cross-check both).
"""

from __future__ import annotations

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("LOGNNET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    kernels = compiled_kernels
else:
    kernels = python_kernels

BACKEND = kernels.NAME
