"""Backend selection for the hot kernels.

Set ``STAGNET_NO_NUMBA=1`` to force the pure-numpy path. The numba path is
used when numba imports cleanly and the flag is unset.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

_DISABLED = os.environ.get("STAGNET_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

_backend = "numba" if HAS_NUMBA and not _DISABLED else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Switch backend at runtime; returns the previous one."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous
