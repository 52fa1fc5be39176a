"""Backend selection for the hot numeric kernels.

The cyclic Jacobi sweep dominates runtime (one eigendecomposition per
extraction step), so it ships in two interchangeable implementations:

* ``numba``: scalar loops compiled with ``@njit`` (default when numba
  imports cleanly);
* ``numpy``: the same sweep with vectorized row/column rotations, used as
  a pure-numpy fallback.

The active backend is chosen once at import from the ``WPC_BACKEND``
environment variable and can be switched at runtime with `set_backend`
(used by the cross-checking tests and by ``benchmarks/bench_backends.py``).
Both paths apply identical rotation formulas in identical order, so
results agree to rounding and each path is deterministic on its own.
"""

from __future__ import annotations

import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap if not (args and callable(args[0])) else args[0]


def _jacobi_cycle_scalar(a, v, off_tol, max_sweeps):
    """Cyclic Jacobi sweeps on the symmetric matrix ``a`` (in place).

    ``v`` accumulates the rotations (columns end up as eigenvectors,
    eigenvalues on the diagonal of ``a``). Returns the number of sweeps
    used, or -1 if the off-diagonal norm is still above ``off_tol`` after
    ``max_sweeps`` sweeps.
    """
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off2 = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off2 += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off2) <= off_tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if abs(theta) > 1e130:
                    t = 0.5 / theta
                elif theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (theta - math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = c * aip - s * aiq
                    a[i, q] = s * aip + c * aiq
                for j in range(n):
                    apj = a[p, j]
                    aqj = a[q, j]
                    a[p, j] = c * apj - s * aqj
                    a[q, j] = s * apj + c * aqj
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = c * vip - s * viq
                    v[i, q] = s * vip + c * viq
    off2 = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            off2 += a[i, j] * a[i, j]
    if math.sqrt(2.0 * off2) <= off_tol:
        return max_sweeps
    return -1


def _jacobi_cycle_numpy(a, v, off_tol, max_sweeps):
    """Vectorized variant of `_jacobi_cycle_scalar` (same rotations)."""
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
        if off <= off_tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                if abs(theta) > 1e130:
                    t = 0.5 / theta
                elif theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = 1.0 / (theta - math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    off = math.sqrt(2.0 * float(np.sum(np.triu(a, 1) ** 2)))
    if off <= off_tol:
        return max_sweeps
    return -1


_IMPLS = {"numpy": _jacobi_cycle_numpy}
if HAVE_NUMBA:
    _IMPLS["numba"] = njit(cache=True)(_jacobi_cycle_scalar)


def _initial_backend() -> str:
    requested = os.environ.get("WPC_BACKEND", "").strip().lower()
    if requested in _IMPLS:
        return requested
    if requested:
        logger.warning("WPC_BACKEND=%r unavailable, falling back to numpy", requested)
        return "numpy"
    return "numba" if HAVE_NUMBA else "numpy"


_ACTIVE = _initial_backend()


def get_backend() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _ACTIVE


def set_backend(name: str) -> None:
    """Switch the kernel backend at runtime; raises on unknown names."""
    global _ACTIVE
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(_IMPLS)}")
    _ACTIVE = name


def jacobi_cycle(a: np.ndarray, v: np.ndarray, off_tol: float, max_sweeps: int) -> int:
    """Run cyclic Jacobi sweeps in place using the active backend."""
    return _IMPLS[_ACTIVE](a, v, off_tol, max_sweeps)
