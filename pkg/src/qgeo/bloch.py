"""Single-qubit geometry in Bloch-ball coordinates.

A monotone metric on qubit states is fixed by a scalar function ``f`` on
``(0, inf)`` through

    ds^2 = (1/4) [dr^2 / (1 - r^2) + r^2 / ((1 + r) f(t)) dOmega^2],
    t = (1 - r) / (1 + r).

This module ships the Bures, Sjöqvist and ZHSL choices of ``f``, randomized
and pinned checks of the conditions a proper Morozova-Chentsov function must
satisfy, the normalized volume densities, and closed-form geodesic lengths
between states in the xz-plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, RadiusOutOfDomain, ValidationError
from .linalg import dagger, haar_unitary, hermitian_function
from .states import BlochState

QUADRATURE_RADIAL = 128
QUADRATURE_POLAR = 64
CHECK_TOL = 1e-12
MONOTONE_TOL = 1e-10


@dataclass(frozen=True)
class MCFunction:
    """A positive scalar function ``f(t)``, ``t > 0``, defining a qubit metric."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    nu: float | None = None

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
            raise DomainError(f"{self.name}: argument must be finite and > 0")
        out = self.func(arr)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def value_at_one(self) -> float:
        return self(1.0)

    @property
    def singular_at_one(self) -> bool:
        """True when ``f(1) = 0``, so angular terms blow up at the ball's centre."""
        return self.value_at_one == 0.0

    def on_matrix(self, a) -> np.ndarray:
        """Apply ``f`` to a positive-definite Hermitian matrix through its spectrum."""
        return hermitian_function(a, self.func)


def _bures(t):
    return 0.5 * (1.0 + t)


def _sjoqvist(t):
    return 0.5 * (1.0 - t) ** 2 / (1.0 + t)


f_bures = MCFunction("bures", _bures)
f_sjoqvist = MCFunction("sjoqvist", _sjoqvist)


def _zhsl_shape(nu: float):
    def g(t):
        return _sjoqvist(t) * (4.0 * t / (1.0 + t) ** 2) ** (0.5 - nu)
    return g


def _zhsl_gamma_factor(nu: float) -> float:
    """``2 pi^{3/2} Gamma(nu) / Gamma(1/2 + nu)``."""
    return 2.0 * math.pi**1.5 * math.exp(math.lgamma(nu) - math.lgamma(0.5 + nu))


def _check_nu(nu: float) -> float:
    nu = float(nu)
    if not (math.isfinite(nu) and nu > 0):
        raise DomainError(f"nu must be finite and > 0, got {nu!r}")
    return nu


@lru_cache(maxsize=None)
def zhsl_normalization(nu: float) -> float:
    """Constant ``N(nu)`` normalizing the volume element built from the ZHSL shape
    ``(1/2)(1-t)^2/(1+t) (4t/(1+t)^2)^{1/2-nu}``, by Gauss-Legendre quadrature.

    Analytically this is ``Gamma(1/2 + nu) / (2 pi^{3/2} Gamma(nu))``; at
    ``nu = 1/2`` it is ``1/(2 pi^2)``.
    """
    nu = _check_nu(nu)
    return normalization_constant(MCFunction(f"zhsl-shape({nu:g})", _zhsl_shape(nu), nu))


def f_zhsl(nu: float) -> MCFunction:
    """ZHSL function ``N(nu) (2 pi^{3/2} Gamma(nu)/Gamma(1/2+nu)) (1/2)(1-t)^2/(1+t) (4t/(1+t)^2)^{1/2-nu}``."""
    nu = _check_nu(nu)
    scale = zhsl_normalization(nu) * _zhsl_gamma_factor(nu)
    shape = _zhsl_shape(nu)
    return MCFunction(f"zhsl({nu:g})", lambda t: scale * shape(t), nu)


def t_of_r(r):
    return (1.0 - r) / (1.0 + r)


# -- line element -----------------------------------------------------------------

def _angular_coefficient(f: MCFunction, r: float) -> float:
    """``r^2 / ((1 + r) f(t(r)))``, the factor multiplying ``dOmega^2 / 4``."""
    if r == 0.0:
        if f.singular_at_one:
            raise RadiusOutOfDomain(f"{f.name} metric is singular at r = 0")
        return 0.0
    return r * r / ((1.0 + r) * f(t_of_r(r)))


def mc_line_element(f: MCFunction, b: BlochState, db) -> float:
    """``ds^2`` for the tangent displacement ``db = (dr, dtheta, dphi)`` at ``b``.

    Raises:
        RadiusOutOfDomain: at ``r = 1``, or at ``r = 0`` with a nonzero angular
            displacement when ``f(1) = 0``.
    """
    dr, dth, dph = (float(x) for x in db)
    r = b.r
    if r >= 1.0:
        raise RadiusOutOfDomain("line element needs r < 1")
    domega2 = dth * dth + math.sin(b.theta) ** 2 * dph * dph
    radial = dr * dr / (1.0 - r * r)
    if domega2 == 0.0:
        return 0.25 * radial
    return 0.25 * (radial + _angular_coefficient(f, r) * domega2)


# -- Morozova-Chentsov conditions -------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    residual: float
    detail: str = ""


def check_self_inversive(f: MCFunction, sample_ts, tol: float = CHECK_TOL) -> CheckReport:
    """Max of ``|f(1/t) - f(t)/t| / max(1, |f(t)/t|)`` over ``sample_ts``; passes below ``tol``.

    The scaling only matters where ``f(t)/t`` exceeds 1, where an absolute
    residual would measure float spacing rather than the identity.
    """
    t = np.asarray(sample_ts, dtype=float)
    rhs = f(t) / t
    res = float(np.max(np.abs(f(1.0 / t) - rhs) / np.maximum(1.0, np.abs(rhs))))
    return CheckReport("self_inversive", res < tol, res)


def check_normalization(f: MCFunction, tol: float = CHECK_TOL) -> CheckReport:
    v = f.value_at_one
    return CheckReport("normalization", abs(v - 1.0) < tol, abs(v - 1.0), f"f(1) = {v!r}")


@dataclass(frozen=True)
class MonotoneReport:
    name: str
    trials: int
    violation_found: bool
    min_eigenvalue: float
    counterexample: tuple | None = None

    @property
    def verdict(self) -> str:
        if self.violation_found:
            return "violation found"
        return f"no violation found in {self.trials} trials"


def _random_pd(dim: int, rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(dim, rng)
    w = np.exp(rng.uniform(-3.0, 3.0, dim))
    a = (u * w) @ dagger(u)
    return 0.5 * (a + dagger(a))


def _random_psd_increment(dim: int, rng: np.random.Generator) -> np.ndarray:
    rank = int(rng.integers(1, dim + 1))
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    p = g @ dagger(g) * math.exp(rng.uniform(-4.0, 2.0))
    return 0.5 * (p + dagger(p))


def monotone_gap(f: MCFunction, a, b) -> float:
    """Smallest eigenvalue of ``f(b) - f(a)``; negative means ``a <= b`` is not preserved."""
    diff = f.on_matrix(b) - f.on_matrix(a)
    return float(np.linalg.eigvalsh(0.5 * (diff + dagger(diff)))[0])


def check_operator_monotone(f: MCFunction, dim: int, trials: int, rng: np.random.Generator,
                            tol: float = MONOTONE_TOL) -> MonotoneReport:
    """Randomized search for ``a <= b`` with ``f(b) - f(a)`` not PSD.

    Pairs are a random positive-definite ``a`` and ``b = a + p`` with ``p`` a
    random PSD matrix of random rank and scale. The search stops at the first
    pair whose gap is below ``-tol``. A clean run is evidence, not proof.
    """
    if dim < 1 or trials < 1:
        raise ValidationError("dim and trials must be >= 1")
    worst = math.inf
    for i in range(trials):
        a = _random_pd(dim, rng)
        b = a + _random_psd_increment(dim, rng)
        gap = monotone_gap(f, a, b)
        worst = min(worst, gap)
        if gap < -tol:
            return MonotoneReport(f.name, i + 1, True, worst, (a, b))
    return MonotoneReport(f.name, trials, False, worst)


def pinned_counterexample(f: MCFunction) -> MonotoneReport:
    """The pair ``a = I/2 <= b = I`` in dimension 2.

    For the Sjöqvist function ``f(I) - f(I/2) = (0 - 1/12) I``.
    """
    a, b = 0.5 * np.eye(2), np.eye(2)
    gap = monotone_gap(f, a, b)
    return MonotoneReport(f.name, 1, gap < -MONOTONE_TOL, gap, (a, b))


# -- volume densities --------------------------------------------------------------

def _gl_nodes(n: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def normalization_constant(f: MCFunction, radial: int = QUADRATURE_RADIAL, polar: int = QUADRATURE_POLAR) -> float:
    """``N`` with ``int N r^2 sin(theta) / (f(t) sqrt(1-r^2) (1+r)) dr dtheta dphi = 1``.

    Tensor-product Gauss-Legendre with ``r = sin(alpha)``, which absorbs the
    ``1/sqrt(1-r^2)`` endpoint singularity.
    """
    alpha, wa = _gl_nodes(radial, 0.0, 0.5 * math.pi)
    theta, wt = _gl_nodes(polar, 0.0, math.pi)
    r = np.sin(alpha)
    radial_part = r * r / (f(t_of_r(r)) * (1.0 + r))
    total = 2.0 * math.pi * np.dot(wa, radial_part) * np.dot(wt, np.sin(theta))
    return 1.0 / float(total)


def mc_volume_density(f: MCFunction, b: BlochState, norm: float | None = None) -> float:
    """``p(r, theta, phi)`` for an arbitrary ``f``; ``norm`` defaults to :func:`normalization_constant`."""
    r = b.r
    if r >= 1.0:
        raise RadiusOutOfDomain("volume density needs r < 1")
    n = normalization_constant(f) if norm is None else norm
    if r == 0.0:
        if not f.singular_at_one:
            return 0.0
        raise RadiusOutOfDomain(f"{f.name} density at r = 0 is a 0/0 limit; use volume_density")
    return n * r * r * math.sin(b.theta) / (f(t_of_r(r)) * math.sqrt(1.0 - r * r) * (1.0 + r))


def volume_density(kind: str, b: BlochState, nu: float | None = None) -> float:
    """Closed-form normalized densities.

    ``bures``: ``r^2 sin(theta) / (pi^2 sqrt(1 - r^2))``;
    ``sjoqvist``: ``sin(theta) / (2 pi^2 sqrt(1 - r^2))``;
    ``zhsl``: ``Gamma(1/2 + nu) / (2 pi^{3/2} Gamma(nu)) (1 - r^2)^{nu - 1} sin(theta)``.
    """
    r, s = b.r, math.sin(b.theta)
    if r >= 1.0:
        raise RadiusOutOfDomain("volume density needs r < 1")
    if kind == "bures":
        return r * r * s / (math.pi**2 * math.sqrt(1.0 - r * r))
    if kind == "sjoqvist":
        return s / (2.0 * math.pi**2 * math.sqrt(1.0 - r * r))
    if kind == "zhsl":
        nu = _check_nu(1.0 if nu is None else nu)
        return (1.0 - r * r) ** (nu - 1.0) * s / _zhsl_gamma_factor(nu)
    raise ValueError(f"unknown kind {kind!r}")


# -- geodesic lengths ----------------------------------------------------------------

@dataclass(frozen=True)
class GeodesicEndpoints:
    """``A = (r_a, 0, 0)`` and ``B = (r_b, theta_b, 0)`` in spherical Bloch coordinates."""

    r_a: float
    r_b: float
    theta_b: float

    def __post_init__(self):
        for name in ("r_a", "r_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")
        if not 0.0 <= self.theta_b <= math.pi:
            raise ValidationError(f"theta_b={self.theta_b} outside [0, pi]")


def bures_length(e: GeodesicEndpoints) -> float:
    """``sqrt(2 - 2 F)`` with ``F^2 = (1 + r_a r_b cos theta_b)/2 + sqrt((1-r_a^2)(1-r_b^2))/2``.

    ``1 - F^2`` is assembled from nonnegative pieces,
    ``(r_a - r_b)^2 / ((1 - r_a r_b) + sqrt(...)) + 2 r_a r_b sin^2(theta_b/2)``,
    all over 2, so short lengths keep their relative precision.
    """
    a, b = e.r_a, e.r_b
    root = math.sqrt((1.0 - a * a) * (1.0 - b * b))
    den = (1.0 - a * b) + root
    radial = (a - b) ** 2 / den if den > 0 else 0.0
    one_minus_f2 = 0.5 * (radial + 2.0 * a * b * math.sin(0.5 * e.theta_b) ** 2)
    one_minus_f2 = min(max(one_minus_f2, 0.0), 1.0)
    fid = math.sqrt(1.0 - one_minus_f2)
    return math.sqrt(2.0 * one_minus_f2 / (1.0 + fid))


def sjoqvist_length(e: GeodesicEndpoints) -> float:
    """``(1/2) sqrt(theta_b^2 + (arcsin r_b - arcsin r_a)^2)``."""
    return 0.5 * math.hypot(e.theta_b, math.asin(e.r_b) - math.asin(e.r_a))


def geodesic_length(kind: str, e: GeodesicEndpoints) -> float:
    if kind == "bures":
        return bures_length(e)
    if kind == "sjoqvist":
        return sjoqvist_length(e)
    raise ValueError(f"unknown kind {kind!r}")


def fubini_study_length(theta_b: float) -> float:
    """Half the Fubini-Study distance between pure states at Bloch angle ``theta_b``: ``sin(theta_b/2)``."""
    if not 0.0 <= theta_b <= math.pi:
        raise ValidationError(f"theta_b={theta_b} outside [0, pi]")
    return math.sin(0.5 * theta_b)


# -- cylinder chart -------------------------------------------------------------------

def cylinder_chart(b: BlochState) -> tuple[float, float, float]:
    """``(alpha, theta, phi)`` with ``r = sin(alpha)``."""
    return math.asin(b.r), b.theta, b.phi


def chart_tangent(b: BlochState, db) -> tuple[float, float, float]:
    """Push ``(dr, dtheta, dphi)`` into the chart: ``dalpha = dr / sqrt(1 - r^2)``."""
    dr, dth, dph = (float(x) for x in db)
    if b.r >= 1.0:
        raise RadiusOutOfDomain("chart tangent needs r < 1")
    return dr / math.sqrt(1.0 - b.r**2), dth, dph


def chart_line_element(kind: str, chart, dchart) -> float:
    """``ds^2`` in the cylinder chart.

    Sjöqvist: ``(1/4)(dalpha^2 + dOmega^2)``;
    Bures: ``(1/4)(dalpha^2 + sin^2(alpha) dOmega^2)``.
    """
    alpha, theta, _ = chart
    da, dth, dph = dchart
    domega2 = dth * dth + math.sin(theta) ** 2 * dph * dph
    if kind == "sjoqvist":
        return 0.25 * (da * da + domega2)
    if kind == "bures":
        return 0.25 * (da * da + math.sin(alpha) ** 2 * domega2)
    raise ValueError(f"unknown kind {kind!r}")
