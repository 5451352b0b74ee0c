"""Kernel backend selection: compiled extension if built, else pure Python."""

try:
    from . import _ckernels as kernels

    BACKEND = "cython"
except ImportError:  # extension not built on this install
    from . import _kernels as kernels

    BACKEND = "python"
