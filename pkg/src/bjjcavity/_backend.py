"""Select the compiled kernels when available.

Set ``BJJCAVITY_PURE_PYTHON=1`` to force the pure-Python implementation.
"""

import os

from . import _pykernels

pykernels = _pykernels

if os.environ.get("BJJCAVITY_PURE_PYTHON", "") not in ("", "0"):
    ckernels = None
else:
    try:
        from . import _ckernels as ckernels
    except ImportError:
        ckernels = None

kernels = ckernels if ckernels is not None else pykernels
BACKEND = "cython" if ckernels is not None else "python"


def get_kernels(backend=None):
    """Kernel module for ``"cython"``, ``"python"`` or ``None`` (the import-time choice)."""
    if backend is None:
        return kernels
    if backend == "python":
        return pykernels
    if backend == "cython":
        if ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return ckernels
    raise ValueError(f"unknown backend {backend!r}")
