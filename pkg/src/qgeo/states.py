"""Density operators, spectral and ensemble decompositions, thermal and Bloch states."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NotPSD, NotUnitary, TraceNotOne, ValidationError
from .linalg import (
    DEGENERACY_TOL,
    as_matrix,
    check_hermitian,
    dagger,
    eig_hermitian,
    haar_unitary,
    hermitian_residual,
    is_unitary,
    spectrum_is_nondegenerate,
)

STATE_TOL = 1e-12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated quantum state. Build it with :func:`validate_density`."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def validate_density(m, tol: float = STATE_TOL) -> DensityOperator:
    """Check Hermiticity, unit trace and positivity, each to ``tol``.

    The stored matrix is the Hermitian part of the input and is read-only.
    """
    if isinstance(m, DensityOperator):
        return m
    a = as_matrix(m)
    res = hermitian_residual(a)
    if res > tol:
        raise NotHermitian(f"not Hermitian: relative residual {res:.3e} > {tol:.1e}")
    a = 0.5 * (a + dagger(a))
    tr = np.real(np.trace(a))
    if abs(tr - 1.0) > tol:
        raise TraceNotOne(f"trace is {tr:.15g}, residual {abs(tr - 1.0):.3e} > {tol:.1e}")
    w_min = float(np.linalg.eigvalsh(a)[0])
    if w_min < -tol:
        raise NotPSD(f"negative eigenvalue {w_min:.3e} < -{tol:.1e}")
    a.setflags(write=False)
    return DensityOperator(a)


def as_state(x) -> DensityOperator:
    return x if isinstance(x, DensityOperator) else validate_density(x)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in descending order with eigenvector columns in the same order."""

    probabilities: np.ndarray
    eigenvectors: np.ndarray
    nondegenerate: bool

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    def amplitudes(self) -> np.ndarray:
        """Columns ``sqrt(p_k) |n_k>``.

        Weights below the eigensolver resolution ``dim * eps`` count as zero,
        so rank-deficient states do not pick up ``sqrt(eps)`` noise.
        """
        p = self.probabilities
        p = np.where(p > p.size * np.finfo(float).eps, p, 0.0)
        return self.eigenvectors * np.sqrt(p)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.probabilities) @ dagger(v)


def spectral(rho, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a state; degeneracy is flagged, not raised."""
    rho = as_state(rho)
    es = eig_hermitian(rho.matrix)
    p = np.clip(es.eigenvalues[::-1], 0.0, None)
    vecs = es.eigenvectors[:, ::-1]
    nondeg = spectrum_is_nondegenerate(p, scale=float(np.linalg.norm(rho.matrix)), tol=degeneracy_tol)
    return SpectralDecomposition(p, np.ascontiguousarray(vecs), nondeg)


@dataclass(frozen=True, eq=False)
class PureStateEnsemble:
    """Subnormalized vectors ``|u_h>``, stored as the rows of ``vectors``."""

    vectors: np.ndarray

    def density(self) -> np.ndarray:
        u = self.vectors
        return u.T @ np.conj(u)


def apply_ensemble_freedom(s: SpectralDecomposition, v) -> PureStateEnsemble:
    """Mix the spectral ensemble with a unitary: ``|u_h> = sum_k V_hk sqrt(p_k) |n_k>``."""
    v = np.asarray(v, dtype=np.complex128)
    n = s.probabilities.size
    if v.shape != (n, n):
        raise DimensionMismatch(f"unitary has shape {v.shape}, expected {(n, n)}")
    if not is_unitary(v):
        raise NotUnitary("mixing matrix is not unitary to 1e-10")
    return PureStateEnsemble(v @ s.amplitudes().T)


def overlap_matrix(a: SpectralDecomposition, b: SpectralDecomposition) -> np.ndarray:
    """``S_kl = sqrt(p_k q_l) <n_k|m_l>`` between two spectral ensembles."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    return dagger(a.amplitudes()) @ b.amplitudes()


def boltzmann_weights(energies, beta: float) -> np.ndarray:
    """Normalized ``exp(-beta E_n)``, shifted by the ground energy so nothing overflows."""
    e = np.asarray(energies, dtype=float)
    x = np.exp(-beta * (e - e.min()))
    return x / x.sum()


def thermal_state(h, beta: float) -> DensityOperator:
    """Gibbs state ``exp(-beta H) / Z`` built from the eigendecomposition of ``H``."""
    if not (math.isfinite(beta) and beta > 0):
        raise ValidationError(f"beta must be finite and positive, got {beta!r}")
    es = eig_hermitian(h)
    p = boltzmann_weights(es.eigenvalues, beta)
    u = es.eigenvectors
    rho = (u * p) @ dagger(u)
    return validate_density(0.5 * (rho + dagger(rho)))


@dataclass(frozen=True)
class BlochState:
    """Spherical Bloch coordinates of a qubit state."""

    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValidationError(f"r={self.r} outside [0, 1]")
        if not 0.0 <= self.theta <= math.pi:
            raise ValidationError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise ValidationError(f"phi={self.phi} outside [0, 2pi)")

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return self.r * np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def determinant(self) -> float:
        # (1/4)(1 - r^2) by direct expansion of (I + r.sigma)/2
        return 0.25 * (1.0 - self.r**2)


def bloch_vector_to_density(vec) -> np.ndarray:
    x, y, z = (float(c) for c in vec)
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=np.complex128)


def bloch_to_density(b: BlochState) -> DensityOperator:
    return validate_density(bloch_vector_to_density(b.vector))


def bloch_vector(rho) -> np.ndarray:
    rho = as_state(rho)
    if rho.dim != 2:
        raise DimensionMismatch(f"Bloch coordinates need a qubit, got dim {rho.dim}")
    return np.array([float(np.real(np.trace(rho.matrix @ s))) for s in PAULIS])


def density_to_bloch(rho) -> BlochState:
    x, y, z = bloch_vector(rho)
    rxy = math.hypot(x, y)
    r = min(math.hypot(rxy, z), 1.0)
    theta = math.atan2(rxy, z) if r > 0 else 0.0
    phi = math.atan2(y, x) % (2 * math.pi) if rxy > 0 else 0.0
    if phi >= 2 * math.pi:
        phi = 0.0
    return BlochState(r, theta, phi)


def random_simplex(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the probability simplex (normalized exponential spacings)."""
    e = rng.standard_exponential(dim)
    return e / e.sum()


def sample_zhsl(dim: int, rng: np.random.Generator) -> DensityOperator:
    """Random state: uniform-simplex spectrum conjugated by a Haar unitary."""
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    d = random_simplex(dim, rng)
    u = haar_unitary(dim, rng)
    rho = (u * d) @ dagger(u)
    return validate_density(0.5 * (rho + dagger(rho)))


# -- JSON file format -------------------------------------------------------

def matrix_to_json(m: np.ndarray, **extra) -> dict:
    m = np.asarray(m, dtype=np.complex128)
    out = {"dim": int(m.shape[0]), "re": np.real(m).tolist(), "im": np.imag(m).tolist()}
    out.update(extra)
    return out


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix record: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DimensionMismatch(f"declared dim {dim} but got re{re.shape} im{im.shape}")
    return re + 1j * im


def state_to_json(rho) -> dict:
    return matrix_to_json(as_state(rho).matrix)


def state_from_json(obj: dict) -> DensityOperator:
    return validate_density(matrix_from_json(obj))


def load_state(path) -> DensityOperator:
    return state_from_json(json.loads(Path(path).read_text()))


def save_state(rho, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho)))


def load_hamiltonian(path) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    if obj.get("hermitian") is not True:
        raise ValidationError('Hamiltonian file must carry "hermitian": true')
    h = matrix_from_json(obj)
    check_hermitian(h)
    return 0.5 * (h + dagger(h))


def save_hamiltonian(h, path) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(h, hermitian=True)))
