"""Force-assembly kernels: compiled core with a pure-numpy fallback.

The compiled extension (`tissuefit.kernels._core`, Cython) is preferred
when importable; otherwise the numpy backend is used.  Set the
environment variable TISSUEFIT_BACKEND to "numpy" or "compiled" to force
a choice (forcing "compiled" raises if the extension is missing).

Both backends implement `assemble_forces` with identical semantics; see
`numpy_backend.assemble_forces` for the contract.
"""

from __future__ import annotations

import os

from . import numpy_backend
from .prep import ElementData, build_element_data

__all__ = [
    "ElementData",
    "build_element_data",
    "get_backend",
    "available_backends",
    "BACKEND_NAME",
]

try:
    from . import _core  # compiled extension, optional
except ImportError:
    _core = None


def available_backends():
    names = ["numpy"]
    if _core is not None:
        names.append("compiled")
    return names


def get_backend(name: str | None = None):
    """Return the kernel module to use; `name` overrides the default."""
    if name is None:
        name = os.environ.get("TISSUEFIT_BACKEND")
    if name in (None, "", "auto"):
        return _core if _core is not None else numpy_backend
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if _core is None:
            raise ImportError(
                "compiled kernel requested but tissuefit.kernels._core is not built"
            )
        return _core
    raise ValueError(f"unknown backend '{name}' (use 'numpy' or 'compiled')")


BACKEND_NAME = get_backend().NAME
