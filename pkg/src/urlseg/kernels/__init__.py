"""GRU sequence kernels with a runtime-selected backend.

The compiled Cython extension is preferred when it imported cleanly; the
pure-numpy reference implementation is the fallback and the semantic contract.
Set URLSEG_KERNELS=numpy or URLSEG_KERNELS=compiled to force a backend
(forcing an unavailable one raises at import).
"""

from __future__ import annotations

import os

from . import reference

try:
    from . import _gru_cy as _compiled
except ImportError:
    _compiled = None


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    backends = {"numpy": reference}
    if _compiled is not None:
        backends["compiled"] = _compiled
    return backends


def _select():
    requested = os.environ.get("URLSEG_KERNELS", "auto").lower()
    backends = available_backends()
    if requested == "auto":
        return backends.get("compiled", reference)
    if requested not in backends:
        raise RuntimeError(
            f"URLSEG_KERNELS={requested!r} but only {sorted(backends)} are available"
        )
    return backends[requested]


_active = _select()

BACKEND: str = _active.NAME
gru_forward = _active.gru_forward
gru_backward = _active.gru_backward


def get_backend() -> str:
    return BACKEND
