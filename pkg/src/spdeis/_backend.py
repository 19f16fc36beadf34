"""Selects the batch simulator at import: compiled if it loads, else numpy."""

from __future__ import annotations

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = "compiled" if _compiled is not None else "python"


def available() -> tuple:
    return ("compiled", "python") if _compiled is not None else ("python",)


def name() -> str:
    return _active


def use(backend: str) -> None:
    """Switch the default backend ('compiled' or 'python')."""
    global _active
    if backend not in available():
        raise ValueError(f"backend {backend!r} is not available; have {available()}")
    _active = backend


def get(backend: str | None = None):
    b = backend or _active
    if b == "compiled":
        if _compiled is None:
            raise ValueError("compiled backend is not available")
        return _compiled.simulate_batch
    if b == "python":
        return _fallback.simulate_batch
    raise ValueError(f"unknown backend {b!r}")
