"""Dense complex-matrix primitives.

Everything here works on small square ``numpy`` arrays (dimension up to 64).
Eigen-solvers and SVDs come from LAPACK through :mod:`numpy.linalg`; this
module adds the validation, gauge fixing and tolerance conventions the rest
of the package relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPSD, NumericalFailure, SingularMatrix, ValidationError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-12
DEGENERACY_TOL = 1e-10
MAX_DIM = 64


def as_matrix(m, *, square: bool = True) -> np.ndarray:
    """Return ``m`` as a finite complex128 2-D array (a copy)."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] > MAX_DIM or a.shape[1] > MAX_DIM:
        raise DimensionMismatch(f"dimension {a.shape} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_residual(m: np.ndarray) -> float:
    """Frobenius norm of the anti-Hermitian part, relative to ``max(1, ||m||_F)``."""
    scale = max(1.0, float(np.linalg.norm(m)))
    return float(np.linalg.norm(m - dagger(m))) / scale


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    res = hermitian_residual(m)
    if res > tol:
        raise NotHermitian(f"matrix is not Hermitian: relative residual {res:.3e} > {tol:.1e}")


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return float(np.linalg.norm(dagger(m) @ m - np.eye(m.shape[0]))) <= tol


@dataclass(frozen=True)
class HermitianEigensystem:
    """Ascending eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dagger(u)

    def degenerate(self, tol: float = DEGENERACY_TOL) -> bool:
        return not spectrum_is_nondegenerate(self.eigenvalues, tol=tol)


def fix_gauge(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column's global phase so its largest entry is real positive.

    Near-ties in magnitude (within 1e-12) go to the lowest index so that
    rounding noise cannot flip the choice.
    """
    v = np.array(vectors, dtype=np.complex128)
    mags = np.abs(v)
    for j in range(v.shape[1]):
        col = mags[:, j]
        idx = int(np.flatnonzero(col >= col.max() - 1e-12)[0])
        pivot = v[idx, j]
        if pivot != 0:
            v[:, j] *= np.conj(pivot) / abs(pivot)
    return v


def eig_hermitian(m, tol: float = HERMITIAN_TOL) -> HermitianEigensystem:
    """Eigendecomposition of a Hermitian matrix with a deterministic phase gauge.

    Raises:
        NotHermitian: if ``||m - m^dagger||_F > tol * max(1, ||m||_F)``.
        NumericalFailure: if LAPACK does not converge.
    """
    a = as_matrix(m)
    check_hermitian(a, tol)
    a = 0.5 * (a + dagger(a))
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK convergence
        raise NumericalFailure(str(exc)) from exc
    return HermitianEigensystem(w, fix_gauge(v))


def spectrum_is_nondegenerate(eigenvalues, scale: float | None = None, tol: float = DEGENERACY_TOL) -> bool:
    """True iff every gap between sorted eigenvalues exceeds ``tol * max(1, scale)``.

    ``scale`` defaults to the Frobenius norm of the diagonal matrix of
    eigenvalues (equal to ``||m||_F`` for a Hermitian ``m``).
    """
    w = np.sort(np.asarray(eigenvalues, dtype=float))
    if w.size < 2:
        return True
    if scale is None:
        scale = float(np.linalg.norm(w))
    return bool(np.min(np.diff(w)) > tol * max(1.0, scale))


def hermitian_function(m, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    es = eig_hermitian(m)
    fw = np.asarray(f(es.eigenvalues), dtype=np.complex128)
    u = es.eigenvectors
    out = (u * fw) @ dagger(u)
    return 0.5 * (out + dagger(out))


def psd_sqrt(m, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a positive-semidefinite Hermitian matrix.

    Eigenvalues in ``[-tol * max(1, ||m||_2), 0)`` are treated as rounding
    noise and clamped to zero. So are positive eigenvalues below
    ``dim * eps * ||m||_2``, the resolution of the eigensolver: their square
    roots would otherwise inject ``O(sqrt(eps))`` noise along null directions.
    """
    es = eig_hermitian(m)
    w = es.eigenvalues
    top = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -tol * max(1.0, top):
        raise NotPSD(f"matrix has negative eigenvalue {w[0]:.3e}")
    w = np.where(w > w.size * np.finfo(float).eps * top, w, 0.0)
    root = np.sqrt(w)
    u = es.eigenvectors
    out = (u * root) @ dagger(u)
    return 0.5 * (out + dagger(out))


def trace_norm(m) -> float:
    """Sum of singular values (Schatten 1-norm)."""
    a = as_matrix(m)
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(str(exc)) from exc
    return float(np.sum(s))


def polar_unitary(m, invertibility_tol: float = 1e-12) -> np.ndarray:
    """Unitary factor ``U`` of the left polar decomposition ``m = |m| U``.

    Here ``|m| = sqrt(m m^dagger)``. The factor is unique only for
    invertible ``m``, so a smallest singular value at or below
    ``invertibility_tol`` raises :class:`SingularMatrix`.
    """
    a = as_matrix(m)
    try:
        w, s, vh = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalFailure(str(exc)) from exc
    if s[-1] <= invertibility_tol:
        raise SingularMatrix(f"smallest singular value {s[-1]:.3e} <= {invertibility_tol:.1e}")
    return w @ vh


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: Ginibre matrix, QR, then phase-correct R's diagonal."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
