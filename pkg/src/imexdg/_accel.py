"""Backend switch for the compiled kernels.

Set ``IMEXDG_NUMBA=0`` to force the vectorized numpy implementations.
Numba is also skipped silently when it cannot be imported.
"""
import os

try:  # pragma: no cover - depends on environment
    import numba as _nb
except ImportError:  # pragma: no cover
    _nb = None

_FALSY = {"0", "false", "no", "off"}

NUMBA_AVAILABLE = _nb is not None
_use_numba = NUMBA_AVAILABLE and os.environ.get("IMEXDG_NUMBA", "1").strip().lower() not in _FALSY


def njit(func):
    """Compile ``func`` in nopython mode when numba exists, else return it untouched."""
    if _nb is None:
        return func
    return _nb.njit(cache=False, fastmath=False)(func)


def use_numba() -> bool:
    return _use_numba


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` at runtime (used by the benchmark)."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    _use_numba = name == "numba"


def backend() -> str:
    return "numba" if _use_numba else "numpy"
