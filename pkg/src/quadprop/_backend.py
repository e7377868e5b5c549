"""Backend selection for the hot loops.

``QUADPROP_BACKEND=numba`` (default when numba imports) compiles the direct
kernel sums with ``@njit``; ``QUADPROP_BACKEND=numpy`` forces the vectorised
fallback. The choice is read once at import and can be changed with
:func:`set_backend`.
"""
import os

try:
    import numba
    HAVE_NUMBA = True
    # prefer OpenMP; the TBB layer warns on older TBB builds
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")


def _initial():
    name = os.environ.get("QUADPROP_BACKEND", "numba" if HAVE_NUMBA else "numpy").strip().lower()
    if name not in _VALID:
        raise ValueError(f"QUADPROP_BACKEND must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        name = "numpy"
    return name


_current = _initial()


def get_backend():
    return _current


def set_backend(name):
    """Switch backend at runtime; returns the previous name."""
    global _current
    name = name.lower()
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _current = _current, name
    return previous
