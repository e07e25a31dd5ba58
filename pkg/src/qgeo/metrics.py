"""Finite distances and infinitesimal line elements between mixed states.

Two distances are central here:

* the Sjöqvist distance, which compares the spectral ensembles of two states
  branch by branch after optimizing one phase per eigenvector, and
* the Bures distance, which optimizes over every ensemble decomposition and
  therefore equals ``2 - 2 F`` with ``F`` the Uhlmann fidelity.

Squared distances for nearby states are evaluated as squared norms of
amplitude differences rather than as ``2 - 2 (overlap)``. Both forms are
equal in exact arithmetic, but the difference form keeps full relative
precision when the states are close, which finite-difference checks need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    AmbiguousBranchMatching,
    DegenerateSpectrum,
    DimensionMismatch,
    StepTooLarge,
    ValidationError,
)
from .linalg import DEGENERACY_TOL, as_matrix, check_hermitian, dagger, eig_hermitian, psd_sqrt, spectrum_is_nondegenerate, trace_norm
from .states import SpectralDecomposition, as_state, boltzmann_weights, overlap_matrix, spectral

Curve = Callable[[float], object]

MIN_BRANCH_OVERLAP = 0.5
DEFAULT_FD_STEP = 1e-5
RICHARDSON_BUDGET = 1e-6


# -- branch matching ----------------------------------------------------------

def match_branches(ref: np.ndarray, other: np.ndarray, min_overlap: float = MIN_BRANCH_OVERLAP) -> np.ndarray:
    """Pair eigenvector columns of ``other`` with those of ``ref``.

    Greedy assignment on ``|<ref_k|other_l>|``: the largest remaining
    overlap is fixed first. Returns ``perm`` with ``other[:, perm[k]]``
    paired to ``ref[:, k]``.

    Raises:
        AmbiguousBranchMatching: if any chosen overlap is below ``min_overlap``.
    """
    mags = np.abs(dagger(ref) @ other)
    n = mags.shape[0]
    perm = np.full(n, -1)
    work = mags.copy()
    for _ in range(n):
        k, l = np.unravel_index(np.argmax(work), work.shape)
        if mags[k, l] < min_overlap:
            raise AmbiguousBranchMatching(
                f"best remaining eigenvector overlap {mags[k, l]:.3f} < {min_overlap}"
            )
        perm[k] = l
        work[k, :] = -1.0
        work[:, l] = -1.0
    return perm


def _aligned(ref: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Rephase columns of ``other`` so that ``<ref_k|other_k>`` is real and >= 0."""
    ov = np.einsum("ik,ik->k", np.conj(ref), other)
    mag = np.abs(ov)
    phase = np.where(mag > 0, np.conj(ov) / np.where(mag > 0, mag, 1.0), 1.0)
    return other * phase


def _matched(ref: SpectralDecomposition, other: SpectralDecomposition, matching: str):
    if matching == "overlap":
        perm = match_branches(ref.eigenvectors, other.eigenvectors)
    elif matching == "eigenvalue":
        perm = np.arange(ref.probabilities.size)
    else:
        raise ValueError(f"unknown matching rule {matching!r}")
    return other.probabilities[perm], other.eigenvectors[:, perm]


# -- finite distances -----------------------------------------------------------

def _same_state(a, b) -> bool:
    return bool(np.linalg.norm(a.matrix - b.matrix) <= 1e-14)


def sjoqvist_distance(a, b, *, matching: str = "overlap", degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """Squared Sjöqvist distance ``2 - 2 sum_k sqrt(p_k q_k) |<n_k|m_k>|``.

    Eigenbranches of ``b`` are paired with those of ``a`` by eigenvector
    overlap (``matching="overlap"``) or by eigenvalue rank
    (``matching="eigenvalue"``). Identical inputs return 0 even when their
    spectrum is degenerate.

    Raises:
        DegenerateSpectrum: if either state has a repeated eigenvalue.
        AmbiguousBranchMatching: if overlap matching has no dominant pairing.
    """
    a, b = as_state(a), as_state(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    if _same_state(a, b):
        return 0.0
    sa, sb = spectral(a, degeneracy_tol), spectral(b, degeneracy_tol)
    if not (sa.nondegenerate and sb.nondegenerate):
        raise DegenerateSpectrum("Sjöqvist distance needs nondegenerate spectra")
    q, m = _matched(sa, sb, matching)
    m = _aligned(sa.eigenvectors, m)
    diff = sa.eigenvectors * np.sqrt(sa.probabilities) - m * np.sqrt(q)
    return float(np.sum(np.abs(diff) ** 2))


def generalized_sjoqvist_distance(a, b) -> float:
    """``2 - 2 ||S||_1`` with ``S`` the overlap matrix of the two spectral ensembles."""
    a, b = as_state(a), as_state(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    return 2.0 - 2.0 * trace_norm(overlap_matrix(spectral(a), spectral(b)))


def fidelity(a, b) -> float:
    """Root fidelity ``tr sqrt(sqrt(b) a sqrt(b))``, clipped to [0, 1].

    Evaluated as the trace norm of ``sqrt(a) sqrt(b)``, which has the same
    value: ``sqrt(b) a sqrt(b) = X^dagger X`` with ``X = sqrt(a) sqrt(b)``.
    Taking singular values avoids the square root of rounding noise that the
    literal form suffers when either state is rank deficient.
    """
    a, b = as_state(a), as_state(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    f = trace_norm(psd_sqrt(a.matrix) @ psd_sqrt(b.matrix))
    return min(max(f, 0.0), 1.0)


def bures_distance(a, b) -> float:
    """Squared Bures distance ``tr a + tr b - 2 F(a, b)``.

    Evaluated as ``||sqrt(a) - sqrt(b) W||_F^2`` where ``W`` is the unitary
    that maximizes ``Re tr(sqrt(a) sqrt(b) W)`` (taken from an SVD).
    """
    a, b = as_state(a), as_state(b)
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")
    ra, rb = psd_sqrt(a.matrix), psd_sqrt(b.matrix)
    u, _, vh = np.linalg.svd(ra @ rb)
    w = dagger(vh) @ dagger(u)
    return float(np.linalg.norm(ra - rb @ w) ** 2)


def bures_angle(a, b) -> float:
    """``arccos F``, computed as ``2 arcsin(D/2)`` to stay accurate near 0."""
    d = math.sqrt(bures_distance(a, b))
    return 2.0 * math.asin(min(1.0, d / 2.0))


def _ket(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValidationError("zero vector is not a state")
    return v / n


def fubini_study_distance(psi, phi) -> float:
    """``2 sqrt(1 - |<psi|phi>|^2)`` for normalized kets.

    With this normalization half the distance between qubit states at Bloch
    angle ``theta`` is ``sin(theta / 2)``.
    """
    ov = abs(np.vdot(_ket(psi), _ket(phi)))
    return 2.0 * math.sqrt(max(0.0, 1.0 - min(ov, 1.0) ** 2))


# -- line elements --------------------------------------------------------------

@dataclass(frozen=True)
class LineElement:
    """Squared length of an infinitesimal displacement, split as classical + nonclassical."""

    classical: float
    nonclassical: float

    @property
    def total(self) -> float:
        return self.classical + self.nonclassical


def _spectrum_at(curve: Curve, t: float, degeneracy_tol: float) -> SpectralDecomposition:
    s = spectral(curve(t), degeneracy_tol)
    if not s.nondegenerate:
        raise DegenerateSpectrum(f"degenerate spectrum at t={t!r}")
    return s


def _transported_neighbours(curve: Curve, t0: float, h: float, degeneracy_tol: float):
    """Spectra at ``t0 - h``, ``t0``, ``t0 + h``, with the outer two branch-matched
    to ``t0`` and rephased so each ``<n_k(t0)|n_k(t0 +- h)>`` is real positive."""
    s0 = _spectrum_at(curve, t0, degeneracy_tol)
    out = []
    for tt in (t0 - h, t0 + h):
        s = _spectrum_at(curve, tt, degeneracy_tol)
        p, v = _matched(s0, s, "overlap")
        out.append((p, _aligned(s0.eigenvectors, v)))
    return s0, out[0], out[1]


def _rates(curve: Curve, t0: float, h: float, degeneracy_tol: float):
    """Metric coefficients (per unit dt^2): classical, Sjöqvist nc, Bures nc."""
    s0, (pm, vm), (pp, vp) = _transported_neighbours(curve, t0, h, degeneracy_tol)
    p = s0.probabilities
    pdot = (pp - pm) / (2 * h)
    ndot = (vp - vm) / (2 * h)
    pos = p > 0
    classical = 0.25 * float(np.sum(pdot[pos] ** 2 / p[pos]))
    coup = np.abs(dagger(s0.eigenvectors) @ ndot) ** 2
    np.fill_diagonal(coup, 0.0)
    sjo_nc = float(np.sum(p * coup.sum(axis=0)))
    psum = p[:, None] + p[None, :]
    pdiff = p[:, None] - p[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(psum > 0, pdiff**2 / (2 * psum), 0.0)
    bures_nc = float(np.sum(w * coup))
    return np.array([classical, sjo_nc, bures_nc])


def _richardson_rates(curve: Curve, t0: float, h: float, degeneracy_tol: float, kind: str):
    coarse = _rates(curve, t0, h, degeneracy_tol)
    fine = _rates(curve, t0, h / 2, degeneracy_tol)
    rates = (4 * fine - coarse) / 3
    col = 1 if kind == "sjoqvist" else 2
    total = rates[0] + rates[col]
    err = abs((fine[0] + fine[col]) - (coarse[0] + coarse[col])) / 3
    if err > RICHARDSON_BUDGET * abs(total) + 1e-14:
        raise StepTooLarge(
            f"truncation estimate {err:.3e} exceeds {RICHARDSON_BUDGET:.0e} of total {total:.3e}; reduce fd_step"
        )
    return rates[0], rates[col]


def _line_element(curve, t, dt, kind, fd_step, anchor, degeneracy_tol) -> LineElement:
    if anchor == "midpoint":
        t0 = t + dt / 2
    elif anchor == "start":
        t0 = t
    else:
        raise ValueError(f"anchor must be 'midpoint' or 'start', got {anchor!r}")
    c, nc = _richardson_rates(curve, t0, fd_step, degeneracy_tol, kind)
    return LineElement(c * dt * dt, nc * dt * dt)


def sjoqvist_line_element(curve: Curve, t: float, dt: float, *, fd_step: float = DEFAULT_FD_STEP,
                          anchor: str = "midpoint", degeneracy_tol: float = DEGENERACY_TOL) -> LineElement:
    """Sjöqvist ``ds^2`` for the step ``t -> t + dt`` along ``curve``.

    ``classical = (1/4) sum_k pdot_k^2 / p_k dt^2`` and
    ``nonclassical = sum_k p_k <ndot_k|(1 - |n_k><n_k|)|ndot_k> dt^2``, with
    derivatives from central differences of step ``fd_step`` in the
    parallel-transport gauge, Richardson-corrected once.

    By default the coefficients are taken at ``t + dt/2``: for a symmetric
    distance this makes ``ds^2`` agree with the finite squared distance
    between ``curve(t)`` and ``curve(t + dt)`` up to ``O(dt^4)``. Pass
    ``anchor="start"`` to evaluate at ``t``.
    """
    return _line_element(curve, t, dt, "sjoqvist", fd_step, anchor, degeneracy_tol)


def bures_line_element(curve: Curve, t: float, dt: float, *, fd_step: float = DEFAULT_FD_STEP,
                       anchor: str = "midpoint", degeneracy_tol: float = DEGENERACY_TOL) -> LineElement:
    """Bures ``ds^2`` for the step ``t -> t + dt``.

    The classical part is the same Fisher-Rao term as in
    :func:`sjoqvist_line_element`; the nonclassical part is
    ``sum_{n != k} (p_n - p_k)^2 / (2 (p_n + p_k)) |<n|dk>|^2``.
    """
    return _line_element(curve, t, dt, "bures", fd_step, anchor, degeneracy_tol)


def fubini_study_line_element(curve: Callable[[float], np.ndarray], t: float, dt: float,
                              *, fd_step: float = DEFAULT_FD_STEP) -> float:
    """``<psidot|(1 - |psi><psi|)|psidot> dt^2`` for a curve of kets, at ``t + dt/2``."""
    t0 = t + dt / 2
    psi = _ket(curve(t0))

    def aligned(v):
        ov = np.vdot(psi, v)
        return v * (np.conj(ov) / abs(ov)) if ov != 0 else v

    fwd = aligned(_ket(curve(t0 + fd_step)))
    bwd = aligned(_ket(curve(t0 - fd_step)))
    psidot = (fwd - bwd) / (2 * fd_step)
    perp = psidot - psi * np.vdot(psi, psidot)
    return float(np.real(np.vdot(perp, perp))) * dt * dt


def metric_tensor(family: Callable[[np.ndarray], object], x, kind: str, *,
                  fd_step: float = DEFAULT_FD_STEP, degeneracy_tol: float = DEGENERACY_TOL):
    """Metric tensor of a multi-parameter family from line elements along coordinate directions.

    Returns ``(g_classical, g_nonclassical)``; off-diagonal entries come from
    polarization along ``e_i + e_j``.
    """
    if kind not in ("sjoqvist", "bures"):
        raise ValueError(f"kind must be 'sjoqvist' or 'bures', got {kind!r}")
    x = np.asarray(x, dtype=float)
    n = x.size

    def rates(v):
        curve = lambda s: family(x + s * v)
        return np.array(_richardson_rates(curve, 0.0, fd_step, degeneracy_tol, kind))

    eye = np.eye(n)
    diag = [rates(eye[i]) for i in range(n)]
    g = np.zeros((2, n, n))
    for i in range(n):
        g[:, i, i] = diag[i]
        for j in range(i + 1, n):
            g[:, i, j] = g[:, j, i] = 0.5 * (rates(eye[i] + eye[j]) - diag[i] - diag[j])
    return g[0], g[1]


def finite_difference_metric(distance: Callable[[object, object], float],
                             family: Callable[[np.ndarray], object], x, *, step: float = 1e-4) -> np.ndarray:
    """Metric tensor as the second-order expansion of a squared distance.

    ``q(v, h) = D(family(x - h v / 2), family(x + h v / 2)) / h^2`` is even in
    ``h``, so one Richardson step ``(4 q(h/2) - q(h)) / 3`` removes the
    ``O(h^2)`` error. Off-diagonals use ``(q(e_i + e_j) - q(e_i - e_j)) / 4``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size

    def q(v):
        vals = []
        for h in (step, step / 2):
            vals.append(distance(family(x - 0.5 * h * v), family(x + 0.5 * h * v)) / (h * h))
        return (4 * vals[1] - vals[0]) / 3

    eye = np.eye(n)
    g = np.zeros((n, n))
    for i in range(n):
        g[i, i] = q(eye[i])
        for j in range(i + 1, n):
            g[i, j] = g[j, i] = 0.25 * (q(eye[i] + eye[j]) - q(eye[i] - eye[j]))
    return g


# -- thermal perturbation forms -------------------------------------------------

@dataclass(frozen=True, eq=False)
class HamiltonianPerturbation:
    """A Hamiltonian ``h``, its differential ``dh`` and an inverse temperature."""

    h: np.ndarray
    dh: np.ndarray
    beta: float

    def __post_init__(self):
        h, dh = as_matrix(self.h), as_matrix(self.dh)
        if h.shape != dh.shape:
            raise DimensionMismatch(f"h{h.shape} and dh{dh.shape} differ")
        check_hermitian(h)
        check_hermitian(dh)
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValidationError(f"beta must be finite and positive, got {self.beta!r}")
        object.__setattr__(self, "h", 0.5 * (h + dagger(h)))
        object.__setattr__(self, "dh", 0.5 * (dh + dagger(dh)))


def _perturbation_terms(p: HamiltonianPerturbation, degeneracy_tol: float):
    es = eig_hermitian(p.h)
    e = es.eigenvalues
    if not spectrum_is_nondegenerate(e, scale=float(np.linalg.norm(p.h)), tol=degeneracy_tol):
        raise DegenerateSpectrum("Hamiltonian spectrum is degenerate")
    weights = boltzmann_weights(e, p.beta)
    coupling = dagger(es.eigenvectors) @ p.dh @ es.eigenvectors
    gaps = e[:, None] - e[None, :]
    np.fill_diagonal(gaps, 1.0)
    mode = np.abs(coupling / gaps) ** 2
    np.fill_diagonal(mode, 0.0)
    return es, weights, mode


def thermal_pair_factors(p: HamiltonianPerturbation) -> np.ndarray:
    """``((e^{-bE_n} - e^{-bE_k}) / (e^{-bE_n} + e^{-bE_k}))^2 = tanh^2(b (E_k - E_n) / 2)``."""
    es = eig_hermitian(p.h)
    e = es.eigenvalues
    return np.tanh(0.5 * p.beta * (e[None, :] - e[:, None])) ** 2


def thermal_nonclassical(p: HamiltonianPerturbation, kind: str, degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """Nonclassical ``ds^2`` of a Gibbs state under ``H -> H + dH`` at fixed beta.

    Sjöqvist: ``sum_{n != k} (p_n + p_k)/2 |<n|dH|k> / (E_n - E_k)|^2``.
    Bures: the same sum with each term multiplied by the pair factor from
    :func:`thermal_pair_factors`, which lies in [0, 1].
    """
    if kind not in ("sjoqvist", "bures"):
        raise ValueError(f"kind must be 'sjoqvist' or 'bures', got {kind!r}")
    _, w, mode = _perturbation_terms(p, degeneracy_tol)
    terms = 0.5 * (w[:, None] + w[None, :]) * mode
    if kind == "bures":
        terms = terms * thermal_pair_factors(p)
    return float(np.sum(terms))


def thermal_classical(p: HamiltonianPerturbation, degeneracy_tol: float = DEGENERACY_TOL) -> float:
    """Fisher-Rao term ``(1/4) sum dp_n^2 / p_n`` with ``dp_n = -beta p_n (dE_n - <dE>)``."""
    es, w, _ = _perturbation_terms(p, degeneracy_tol)
    de = np.real(np.einsum("in,ij,jn->n", np.conj(es.eigenvectors), p.dh, es.eigenvectors))
    dp = -p.beta * w * (de - np.dot(w, de))
    pos = w > 0
    return 0.25 * float(np.sum(dp[pos] ** 2 / w[pos]))


@dataclass(frozen=True)
class PerturbationReport:
    step: float
    finite_difference: np.ndarray  # |<k|dn>|^2, column n
    first_order: np.ndarray  # |<k|dH|n> / (E_n - E_k)|^2, column n
    max_relative_deviation: float


def eigvec_perturbation_check(p: HamiltonianPerturbation, step: float = 1e-5,
                              degeneracy_tol: float = DEGENERACY_TOL) -> PerturbationReport:
    """Compare eigenvector differentials of ``H + s dH`` (central differences in
    ``s``) with first-order perturbation theory.

    The deviation is ``max |fd - formula| / max |formula|`` over ``k != n``
    (absolute when the formula vanishes identically).
    """
    _, _, first_order = _perturbation_terms(p, degeneracy_tol)
    base = eig_hermitian(p.h).eigenvectors
    vecs = []
    for s in (-step, step):
        es = eig_hermitian(p.h + s * p.dh)
        if not spectrum_is_nondegenerate(es.eigenvalues, tol=degeneracy_tol):
            raise DegenerateSpectrum("perturbed Hamiltonian is degenerate")
        v = es.eigenvectors[:, match_branches(base, es.eigenvectors)]
        vecs.append(_aligned(base, v))
    dn = (vecs[1] - vecs[0]) / (2 * step)
    fd = np.abs(dagger(base) @ dn) ** 2
    np.fill_diagonal(fd, 0.0)
    scale = float(np.max(first_order))
    dev = float(np.max(np.abs(fd - first_order)))
    return PerturbationReport(step, fd, first_order, dev / scale if scale > 0 else dev)


# -- parallel transport -------------------------------------------------------------

@dataclass(frozen=True)
class TransportReport:
    branch_residuals: np.ndarray
    mixed_residual: float
    dt: float

    @property
    def max_residual(self) -> float:
        return max(float(np.max(self.branch_residuals)), self.mixed_residual)


def parallel_transport_residuals(curve: Curve, t: float, dt: float,
                                 degeneracy_tol: float = DEGENERACY_TOL) -> TransportReport:
    """Check the parallel-transport gauge of the eigenframe at ``t``.

    Eigenvectors come out of :func:`~qgeo.linalg.eig_hermitian` in a fixed
    gauge. Per branch, the connection ``a_k = Im <n_k|ndot_k>`` (central
    differences in that gauge) is compared with the rate ``fdot_k`` of the
    phases that make neighbouring overlaps real and positive: with
    ``psi_k = e^{i f_k} n_k`` transport means ``a_k + fdot_k = 0``. The mixed
    residual is ``|tr(rho W^dagger Wdot)|`` for the transported frame ``W``.
    """
    s0 = _spectrum_at(curve, t, degeneracy_tol)
    n0 = s0.eigenvectors
    raw, phases, frames = [], [], []
    for tt in (t - dt, t + dt):
        s = _spectrum_at(curve, tt, degeneracy_tol)
        _, v = _matched(s0, s, "overlap")
        ov = np.einsum("ik,ik->k", np.conj(n0), v)
        f = -np.angle(ov)
        raw.append(v)
        phases.append(f)
        frames.append(v * np.exp(1j * f))
    conn = np.imag(np.einsum("ik,ik->k", np.conj(n0), (raw[1] - raw[0]) / (2 * dt)))
    fdot = (phases[1] - phases[0]) / (2 * dt)
    branch = np.abs(conn + fdot)
    wdot = (frames[1] - frames[0]) / (2 * dt)
    mixed = abs(np.sum(s0.probabilities * np.einsum("ik,ik->k", np.conj(n0), wdot)))
    return TransportReport(branch, float(mixed), dt)
