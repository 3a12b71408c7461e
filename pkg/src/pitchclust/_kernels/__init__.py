"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy fallback is used. Set PITCHCLUST_KERNELS=python (or =cython) to force
a backend; forcing cython raises if the extension is missing.
"""

import os

from . import _py


def load_backend(name):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _py
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend: {name!r}")


def _select():
    forced = os.environ.get("PITCHCLUST_KERNELS", "").strip().lower()
    if forced in ("python", "cython"):
        return load_backend(forced)
    try:
        return load_backend("cython")
    except ImportError:
        return _py


_impl = _select()

BACKEND = _impl.BACKEND
pam_build = _impl.pam_build
pam_swap = _impl.pam_swap
attach_sequential = _impl.attach_sequential
comembership_diff = _impl.comembership_diff
