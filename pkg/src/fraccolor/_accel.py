"""Backend selection for the hot kernels.

The numba kernels are used when numba imports cleanly. Setting
``FRACCOLOR_BACKEND=numpy`` (or ``FRACCOLOR_DISABLE_NUMBA=1``) selects the
pure-numpy path, which is vectorized over colors and produces identical
output for identical seeds.
"""
from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")


def _env_backend() -> str:
    name = os.environ.get("FRACCOLOR_BACKEND", "").strip().lower()
    if os.environ.get("FRACCOLOR_DISABLE_NUMBA", "") not in ("", "0"):
        name = "numpy"
    if name and name not in _VALID:
        raise ValueError(f"FRACCOLOR_BACKEND must be one of {_VALID}, got {name!r}")
    if not name:
        name = "numba" if HAVE_NUMBA else "numpy"
    if name == "numba" and not HAVE_NUMBA:
        name = "numpy"
    return name


DEFAULT_BACKEND = _env_backend()


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f


def resolve(backend: str | None) -> str:
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in _VALID:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend
