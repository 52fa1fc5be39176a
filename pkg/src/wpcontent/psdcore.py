"""Dense symmetric / positive-semidefinite matrix calculus.

Everything downstream (content blocks, greedy extraction, denoising)
reduces to a handful of primitives on real symmetric matrices:
eigendecomposition, projection to the PSD cone, the operator square
root, traces, Hilbert-Schmidt norms, and Loewner-order comparisons.

The eigensolver is cyclic Jacobi with a fixed sweep order, so repeated
runs on identical input produce identical output. Eigenvalues are
returned nonincreasing and each eigenvector is normalized so that its
first nonzero component is positive.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatchError,
    JacobiConvergenceError,
    MalformedInputError,
    NotPositiveError,
)

DEFAULT_CLAMP_TOL = 1e-10
JACOBI_MAX_SWEEPS = 60
_JACOBI_OFF_FACTOR = 1e-14
_SIGN_EPS = 1e-12


def resolve_clamp_tol(tol: float | None = None) -> float:
    """Explicit tolerance, else WPC_TOL from the environment, else 1e-10."""
    if tol is not None:
        if tol < 0:
            raise ValueError("clamp tolerance must be nonnegative")
        return float(tol)
    env = os.environ.get("WPC_TOL", "").strip()
    return float(env) if env else DEFAULT_CLAMP_TOL


class SymMatrix:
    """Real symmetric matrix; symmetrized exactly on construction."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries):
        a = np.asarray(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise MalformedInputError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise MalformedInputError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(a)):
            raise MalformedInputError("matrix entries must be finite")
        self.dim = int(a.shape[0])
        self.entries = 0.5 * (a + a.T)
        self.entries.setflags(write=False)

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


class PsdOperator:
    """Validated PSD matrix together with its spectral decomposition.

    Construct via `make_psd`; ``eigenvalues`` are nonincreasing,
    ``eigenvectors`` holds the matching orthonormal columns, and
    ``clamp_applied`` records whether negative rounding noise was
    clipped to zero.
    """

    __slots__ = ("base", "eigenvalues", "eigenvectors", "clamp_applied", "_sqrt")

    def __init__(self, base: SymMatrix, eigenvalues, eigenvectors, clamp_applied: bool):
        self.base = base
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.eigenvectors = np.asarray(eigenvectors, dtype=np.float64)
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)
        self.clamp_applied = bool(clamp_applied)
        self._sqrt = None

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def matrix(self) -> np.ndarray:
        """Dense entries (read-only view)."""
        return self.base.entries

    def sqrt_entries(self) -> np.ndarray:
        """Dense entries of the PSD square root (computed once, cached)."""
        if self._sqrt is None:
            s = _rebuild(self.eigenvectors, np.sqrt(self.eigenvalues))
            s.setflags(write=False)
            self._sqrt = s
        return self._sqrt

    def __repr__(self):
        return (
            f"PsdOperator(dim={self.dim}, trace={float(np.trace(self.matrix)):.6g}, "
            f"clamp_applied={self.clamp_applied})"
        )


def as_entries(a) -> np.ndarray:
    """Dense ndarray view of a SymMatrix, PsdOperator, or array."""
    if isinstance(a, PsdOperator):
        return a.matrix
    if isinstance(a, SymMatrix):
        return a.entries
    return np.asarray(a, dtype=np.float64)


def _rebuild(vecs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """V diag(vals) V^T, symmetrized."""
    m = (vecs * vals) @ vecs.T
    return 0.5 * (m + m.T)


def sym_eigen(m) -> tuple[np.ndarray, np.ndarray]:
    """Full spectral decomposition of a symmetric matrix.

    Returns (eigenvalues nonincreasing, eigenvector columns). Cyclic
    Jacobi with a deterministic sweep order; raises
    JacobiConvergenceError naming the sweep cap on non-convergence.
    """
    a = as_entries(m).copy()
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a[0].copy(), v
    fro = float(np.sqrt(np.sum(a * a)))
    if fro == 0.0:
        return np.zeros(n), v
    sweeps = _kernels.jacobi_cycle(a, v, _JACOBI_OFF_FACTOR * fro, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        off = float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))
        raise JacobiConvergenceError(JACOBI_MAX_SWEEPS, off)
    d = np.diag(a).copy()
    order = np.argsort(-d, kind="stable")
    lam = d[order]
    vecs = v[:, order]
    for j in range(n):
        col = vecs[:, j]
        nz = np.nonzero(np.abs(col) > _SIGN_EPS)[0]
        if nz.size and col[nz[0]] < 0.0:
            vecs[:, j] = -col
    return lam, vecs


def make_psd(m, tol: float | None = None, scale: float | None = None) -> PsdOperator:
    """Project a symmetric matrix to the PSD cone within a relative clamp.

    Eigenvalues in [-tol * lam_max, 0) are clamped to zero; anything more
    negative raises NotPositiveError reporting the offending eigenvalue.
    ``scale`` optionally widens the clamp reference to an external scale:
    needed when ``m`` is a small difference of larger operators, whose
    rounding noise lives at the scale of the operands rather than of the
    difference.
    """
    if not isinstance(m, SymMatrix):
        m = SymMatrix(as_entries(m))
    tol = resolve_clamp_tol(tol)
    lam, vecs = sym_eigen(m)
    lam_max = float(lam[0]) if m.dim else 0.0
    thresh = tol * max(lam_max, scale if scale is not None else 0.0, 0.0)
    lam_min = float(lam[-1])
    if lam_min < -thresh:
        raise NotPositiveError(lam_min, thresh)
    clamp = lam < 0.0
    if np.any(clamp):
        lam = np.where(clamp, 0.0, lam)
        base = SymMatrix(_rebuild(vecs, lam))
        return PsdOperator(base, lam, vecs, True)
    return PsdOperator(m, lam, vecs, False)


def sqrt_psd(r: PsdOperator) -> PsdOperator:
    """PSD square root; squaring it reproduces ``r`` to rounding."""
    s_entries = r.sqrt_entries()
    base = SymMatrix(s_entries)
    return PsdOperator(base, np.sqrt(r.eigenvalues), r.eigenvectors, False)


def trace(a) -> float:
    """Sum of diagonal entries."""
    return float(np.trace(as_entries(a)))


def hs_norm(a) -> float:
    """Frobenius / Hilbert-Schmidt norm; for PSD inputs this is sqrt(tr(A^2))."""
    e = as_entries(a)
    return float(np.sqrt(np.sum(e * e)))


def _lam_max(b) -> float:
    if isinstance(b, PsdOperator):
        return float(b.eigenvalues[0])
    lam, _ = sym_eigen(b)
    return float(lam[0])


def loewner_leq(a, b, tol: float = 1e-8) -> bool:
    """True iff b - a is PSD up to a relative tolerance.

    The check is lam_min(b - a) >= -tol * (1 + lam_max(b)).
    """
    ea = as_entries(a)
    eb = as_entries(b)
    if ea.shape != eb.shape:
        raise DimensionMismatchError(f"shape mismatch: {ea.shape} vs {eb.shape}")
    lam, _ = sym_eigen(SymMatrix(eb - ea))
    return float(lam[-1]) >= -tol * (1.0 + _lam_max(b))


def matrix_from_json(obj) -> SymMatrix:
    """Parse the {"dim": n, "data": [row-major reals]} wire format.

    Rejects payloads whose data length is not dim^2, non-finite values,
    and gross asymmetry (beyond rounding noise).
    """
    if not isinstance(obj, dict) or "dim" not in obj or "data" not in obj:
        raise MalformedInputError('matrix JSON must have "dim" and "data" keys')
    dim = obj["dim"]
    data = obj["data"]
    if not isinstance(dim, int) or dim < 1:
        raise MalformedInputError(f'"dim" must be a positive integer, got {dim!r}')
    if not isinstance(data, list) or len(data) != dim * dim:
        raise MalformedInputError(
            f'"data" must be a list of length dim^2 = {dim * dim}, got {len(data) if isinstance(data, list) else type(data).__name__}'
        )
    try:
        a = np.asarray(data, dtype=np.float64).reshape(dim, dim)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"matrix data is not numeric: {exc}") from exc
    if not np.all(np.isfinite(a)):
        raise MalformedInputError("matrix entries must be finite")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a - a.T)))
    if asym > 1e-10 * (1.0 + scale):
        raise MalformedInputError(f"matrix is not symmetric: max |A - A^T| = {asym:.3e}")
    return SymMatrix(a)


def matrix_to_json(m) -> dict:
    """Serialize to the {"dim", "data"} wire format."""
    e = as_entries(m)
    return {"dim": int(e.shape[0]), "data": [float(x) for x in e.ravel()]}
