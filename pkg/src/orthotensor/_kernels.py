"""Kernel selection: compiled Jacobi sweeps when built, pure Python otherwise.

Set ``ORTHOTENSOR_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _jacobi_py

if os.environ.get("ORTHOTENSOR_PURE_PYTHON", "") not in ("", "0"):
    jacobi_sweeps = _jacobi_py.jacobi_sweeps
    BACKEND = "python"
else:
    try:
        from ._jacobi import jacobi_sweeps
    except ImportError:
        jacobi_sweeps = _jacobi_py.jacobi_sweeps
        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["jacobi_sweeps", "BACKEND"]
