"""Select the compiled Pauli kernels when available, numpy otherwise.

Set ``EXCITRACE_PURE_PYTHON=1`` to force the numpy path.
"""
import os

from . import _kernels_py

if os.environ.get("EXCITRACE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

apply_groups = _impl.apply_groups
pauli_rotate = _impl.pauli_rotate
pauli_expect = _impl.pauli_expect

__all__ = ["BACKEND", "apply_groups", "pauli_rotate", "pauli_expect"]
