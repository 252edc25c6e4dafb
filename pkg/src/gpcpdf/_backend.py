"""Select the kernel implementation at import time.

The compiled module is used when it was built; setting the environment
variable ``GPCPDF_PURE_PYTHON=1`` forces the numpy fallback.
"""
import importlib
import os

from . import _pykernels


def get_kernels(name=None):
    """Return the kernel module called ``name`` ("cython" or "python").

    With ``name=None`` the preferred available backend is returned.
    """
    if name == "python":
        return _pykernels
    if name in (None, "cython"):
        try:
            return importlib.import_module("gpcpdf._ckernels")
        except ImportError:
            if name == "cython":
                raise
            return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        get_kernels("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


kernels = _pykernels if os.environ.get("GPCPDF_PURE_PYTHON") else get_kernels()
BACKEND = kernels.NAME
