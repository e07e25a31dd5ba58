import numpy as np

from qgeo.linalg import haar_unitary


def random_density(dim, rng, rank=None):
    """Random full-rank (or given-rank) state from a Ginibre matrix, built without qgeo."""
    k = dim if rank is None else rank
    g = rng.standard_normal((dim, k)) + 1j * rng.standard_normal((dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim, rng, scale=1.0):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def diag_state(probs, rng=None, dim=None):
    p = np.asarray(probs, dtype=float)
    if rng is None:
        return np.diag(p).astype(complex)
    u = haar_unitary(p.size, rng)
    return (u * p) @ u.conj().T


def qubit_fidelity(a, b):
    """Closed form for qubits: F^2 = tr(ab) + 2 sqrt(det a det b)."""
    da, db = np.linalg.det(a).real, np.linalg.det(b).real
    f2 = np.trace(a @ b).real + 2 * np.sqrt(max(da, 0) * max(db, 0))
    return np.sqrt(max(f2, 0.0))
