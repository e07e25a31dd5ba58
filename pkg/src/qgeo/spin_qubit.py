"""Spin-1/2 in a static field at thermal equilibrium, charted by (beta, omega_z)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .metrics import bures_distance, finite_difference_metric, metric_tensor, sjoqvist_distance
from .states import PAULI_X, PAULI_Y, PAULI_Z, DensityOperator, validate_density

COORDS = ("beta", "omega_z")
KINDS = ("sjoqvist", "bures")


class ZeroFieldWarning(UserWarning):
    """The field vanishes, so the thermal state is I/2 and every tensor is zero."""


@dataclass(frozen=True)
class FieldParams:
    omega_x: float
    omega_y: float
    omega_z: float
    beta: float
    hbar: float = 1.0

    def __post_init__(self):
        vals = (self.omega_x, self.omega_y, self.omega_z, self.beta, self.hbar)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError("field parameters must be finite")
        if self.beta <= 0 or self.hbar <= 0:
            raise ValidationError("beta and hbar must be positive")

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega_x**2 + self.omega_y**2 + self.omega_z**2)

    @property
    def half_gap(self) -> float:
        """``beta hbar omega / 2``, the argument of every tanh below."""
        return 0.5 * self.beta * self.hbar * self.omega

    def with_chart(self, beta: float, omega_z: float) -> "FieldParams":
        return FieldParams(self.omega_x, self.omega_y, omega_z, beta, self.hbar)


def spin_qubit_hamiltonian(p: FieldParams) -> np.ndarray:
    """``(hbar/2) omega . sigma``."""
    return 0.5 * p.hbar * (p.omega_x * PAULI_X + p.omega_y * PAULI_Y + p.omega_z * PAULI_Z)


def spin_qubit_thermal(p: FieldParams) -> DensityOperator:
    """Closed form ``(1/2)[I - tanh(beta hbar omega / 2) (omega . sigma) / omega]``."""
    w = p.omega
    if w == 0:
        warnings.warn("zero field: thermal state is I/2", ZeroFieldWarning, stacklevel=2)
        return validate_density(np.eye(2) / 2)
    n = (p.omega_x * PAULI_X + p.omega_y * PAULI_Y + p.omega_z * PAULI_Z) / w
    return validate_density(0.5 * (np.eye(2) - math.tanh(p.half_gap) * n))


def _sech2(x: float) -> float:
    e = math.exp(-2.0 * abs(x))
    return 4.0 * e / (1.0 + e) ** 2


@dataclass(frozen=True, eq=False)
class MetricTensor2x2:
    g: np.ndarray
    nonclassical_g22: float
    kind: str
    coords: tuple = COORDS

    @property
    def classical(self) -> np.ndarray:
        c = self.g.copy()
        c[1, 1] -= self.nonclassical_g22
        return c


def analytic_metric(p: FieldParams, kind: str) -> MetricTensor2x2:
    """Closed-form 2x2 metric over (beta, omega_z) for the thermal spin qubit.

    Both kinds share ``(hbar^2/16) sech^2(x) [[omega^2, beta omega_z],
    [beta omega_z, beta^2 omega_z^2/omega^2]]`` with ``x = beta hbar omega/2``.
    The nonclassical ``g22`` term is ``(omega_x^2 + omega_y^2) / (4 omega^4)``
    for Sjöqvist and that times ``tanh^2(x)`` for Bures.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    w = p.omega
    if w == 0:
        warnings.warn("zero field: metric tensor is zero", ZeroFieldWarning, stacklevel=2)
        return MetricTensor2x2(np.zeros((2, 2)), 0.0, kind)
    x = p.half_gap
    pref = p.hbar**2 / 16.0 * _sech2(x)
    g = pref * np.array([
        [w * w, p.beta * p.omega_z],
        [p.beta * p.omega_z, (p.beta * p.omega_z / w) ** 2],
    ])
    nc = 0.25 * (p.omega_x**2 + p.omega_y**2) / w**4
    if kind == "bures":
        nc *= math.tanh(x) ** 2
    g[1, 1] += nc
    return MetricTensor2x2(g, nc, kind)


@dataclass(frozen=True)
class DegeneracyReport:
    eigenvalues: np.ndarray
    determinant: float
    principal_direction: np.ndarray
    degenerate: bool


def diagnose_degeneracy(m: MetricTensor2x2) -> DegeneracyReport:
    """Eigen-analysis of a 2x2 metric; degenerate when ``min eig < 1e-12 max eig``.

    ``principal_direction`` is the unit eigenvector of the largest eigenvalue,
    the direction in (beta, omega_z) along which neighbouring states separate
    fastest.
    """
    w, v = np.linalg.eigh(np.asarray(m.g, dtype=float))
    top = v[:, -1]
    if top[np.argmax(np.abs(top))] < 0:
        top = -top
    degenerate = bool(w[-1] <= 0 or w[0] < 1e-12 * w[-1])
    return DegeneracyReport(w, float(np.linalg.det(m.g)), top, degenerate)


def thermal_family(p: FieldParams):
    """Map (beta, omega_z) to the thermal state, keeping omega_x, omega_y, hbar from ``p``."""
    def family(x):
        return spin_qubit_thermal(p.with_chart(float(x[0]), float(x[1])))
    return family


def numeric_metric(p: FieldParams, kind: str, *, method: str = "distance", step: float | None = None) -> MetricTensor2x2:
    """Numerical counterpart of :func:`analytic_metric`.

    ``method="distance"`` differentiates the finite squared distance twice
    (default step 1e-4, Richardson-corrected). ``method="line_element"``
    assembles the tensor from eigenframe line elements, which also yields
    the nonclassical split.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    family = thermal_family(p)
    x = np.array([p.beta, p.omega_z])
    if method == "distance":
        dist = sjoqvist_distance if kind == "sjoqvist" else bures_distance
        g = finite_difference_metric(dist, family, x, step=step or 1e-4)
        nc = float("nan")
    elif method == "line_element":
        gc, gnc = metric_tensor(family, x, kind, fd_step=step or 1e-5)
        g = gc + gnc
        nc = float(gnc[1, 1])
    else:
        raise ValueError(f"unknown method {method!r}")
    return MetricTensor2x2(g, nc, kind)
