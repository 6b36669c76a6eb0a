"""Backend switch for the hot kernels.

Every kernel in :mod:`gaussframe._kernels` exists twice: a numba ``@njit``
loop version and a vectorised numpy version.  The environment variable
``GAUSSFRAME_BACKEND`` (``numba`` or ``numpy``) picks which one the
dispatchers call.  Without numba installed the numpy path is used and the
``njit`` decorator below becomes a no-op.
"""

import os
import warnings

# the bundled TBB is too old for numba; workqueue is always available
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_VALID = ("numba", "numpy")


def _initial_backend():
    name = os.environ.get("GAUSSFRAME_BACKEND", "numba").strip().lower()
    if name not in _VALID:
        warnings.warn(f"unknown GAUSSFRAME_BACKEND={name!r}, using numba")
        name = "numba"
    if name == "numba" and numba is None:
        warnings.warn("numba not importable, falling back to numpy kernels")
        name = "numpy"
    return name


_backend = _initial_backend()


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is present, identity otherwise."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend():
    return _backend


def use_numba():
    return _backend == "numba"


def set_backend(name):
    """Switch backend at runtime (tests and the benchmark use this)."""
    global _backend
    name = name.lower()
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    _backend = name


def set_threads(n):
    if numba is not None and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
