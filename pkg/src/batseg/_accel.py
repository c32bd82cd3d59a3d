"""Kernel acceleration switch.

Hot inner loops (distance transforms, resampling gathers, brute-force
oracles) are compiled with numba when it is importable. Setting the
environment variable ``BATSEG_NO_NUMBA=1`` before import forces the pure
numpy/Python fallback implementations instead; ``benchmarks/bench_kernels.py``
times the two paths against each other.

``BATSEG_THREADS`` caps the worker count used by batch operations.
"""

from __future__ import annotations

import os


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_DISABLED = _env_flag("BATSEG_NO_NUMBA")

if not NUMBA_DISABLED:
    try:
        from numba import njit as _numba_njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False


def maybe_jit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return _numba_njit(cache=True, nogil=True)(fn)
    return fn


def worker_count() -> int:
    """Worker cap for per-subject/per-channel parallel loops."""
    raw = os.environ.get("BATSEG_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 1
        return max(1, n)
    return min(4, os.cpu_count() or 1)
