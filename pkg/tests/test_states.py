import json
import math

import numpy as np
import pytest
import scipy.linalg
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import qubit_fidelity, random_density, random_hermitian
from qgeo.errors import DimensionMismatch, NotHermitian, NotPSD, NotUnitary, TraceNotOne, ValidationError
from qgeo.linalg import haar_unitary, trace_norm
from qgeo.metrics import fidelity
from qgeo.states import (
    PAULI_X,
    PAULI_Z,
    BlochState,
    apply_ensemble_freedom,
    bloch_to_density,
    bloch_vector,
    density_to_bloch,
    load_hamiltonian,
    load_state,
    overlap_matrix,
    sample_zhsl,
    save_hamiltonian,
    save_state,
    spectral,
    thermal_state,
    validate_density,
)


class TestValidateDensity:
    def test_maximally_mixed(self):
        rho = validate_density(np.eye(2) / 2)
        assert rho.dim == 2
        assert rho.purity() == pytest.approx(0.5)

    def test_diagonal(self):
        validate_density(np.diag([0.7, 0.3]))

    def test_negative_eigenvalue(self):
        with pytest.raises(NotPSD, match="negative eigenvalue"):
            validate_density(np.diag([1.2, -0.2]))

    def test_trace(self):
        with pytest.raises(TraceNotOne, match="residual"):
            validate_density(np.diag([0.7, 0.4]))

    def test_hermitian(self):
        with pytest.raises(NotHermitian, match="residual"):
            validate_density([[0.5, 0.1], [0.0, 0.5]])

    def test_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            validate_density(np.diag([0.7, 0.4]))

    def test_read_only(self):
        rho = validate_density(np.eye(2) / 2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1.0


class TestSpectral:
    def test_maximally_mixed_degenerate(self):
        s = spectral(np.eye(2) / 2)
        assert np.allclose(s.probabilities, [0.5, 0.5])
        assert not s.nondegenerate

    def test_diagonal(self):
        s = spectral(np.diag([0.1, 0.9]))
        assert np.allclose(s.probabilities, [0.9, 0.1])
        assert np.allclose(np.abs(s.eigenvectors), [[0, 1], [1, 0]])
        assert s.nondegenerate

    def test_x_polarized(self):
        s = spectral(0.5 * (np.eye(2) + 0.5 * PAULI_X))
        assert np.allclose(s.probabilities, [0.75, 0.25])
        plus = np.array([1, 1]) / math.sqrt(2)
        minus = np.array([1, -1]) / math.sqrt(2)
        assert abs(np.vdot(plus, s.eigenvectors[:, 0])) == pytest.approx(1.0)
        assert abs(np.vdot(minus, s.eigenvectors[:, 1])) == pytest.approx(1.0)

    def test_reconstruction_and_orthonormality(self, rng):
        rho = random_density(5, rng)
        s = spectral(rho)
        assert np.allclose(s.reconstruct(), rho, atol=1e-12)
        v = s.eigenvectors
        assert np.allclose(v.conj().T @ v, np.eye(5), atol=1e-12)
        assert s.probabilities.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(s.probabilities) <= 0)


class TestEnsembleFreedom:
    def test_identity_gives_spectral_ensemble(self, rng):
        s = spectral(random_density(3, rng))
        ens = apply_ensemble_freedom(s, np.eye(3))
        assert np.allclose(ens.vectors, s.amplitudes().T)

    def test_phases_keep_norms(self, rng):
        s = spectral(random_density(3, rng))
        v = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
        ens = apply_ensemble_freedom(s, v)
        assert np.allclose(np.linalg.norm(ens.vectors, axis=1) ** 2, s.probabilities)

    def test_hadamard_on_diagonal(self):
        s = spectral(np.diag([0.7, 0.3]))
        h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        ens = apply_ensemble_freedom(s, h)
        assert np.allclose(np.linalg.norm(ens.vectors, axis=1) ** 2, [0.5, 0.5])
        assert np.allclose(ens.density(), np.diag([0.7, 0.3]))

    def test_errors(self, rng):
        s = spectral(random_density(2, rng))
        with pytest.raises(DimensionMismatch):
            apply_ensemble_freedom(s, np.eye(3))
        with pytest.raises(NotUnitary):
            apply_ensemble_freedom(s, np.array([[1, 1], [0, 1]]))

    def test_reconstruction_sweep(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for i in range(500):
            dim = 2 + i % 5
            rho = random_density(dim, rng)
            ens = apply_ensemble_freedom(spectral(rho), haar_unitary(dim, rng))
            worst = max(worst, np.linalg.norm(ens.density() - rho))
        assert worst < 1e-11


class TestOverlapMatrix:
    def test_same_state(self, rng):
        s = spectral(random_density(3, rng))
        ov = overlap_matrix(s, s)
        assert np.allclose(ov, np.diag(s.probabilities), atol=1e-14)
        assert np.trace(ov).real == pytest.approx(1.0)

    def test_orthogonal_pure(self):
        a = spectral(np.diag([1.0, 0.0]))
        b = spectral(np.diag([0.0, 1.0]))
        assert np.allclose(overlap_matrix(a, b), 0)

    def test_trace_norm_is_fidelity(self, rng):
        for _ in range(20):
            a, b = random_density(2, rng), random_density(2, rng)
            tn = trace_norm(overlap_matrix(spectral(a), spectral(b)))
            assert tn == pytest.approx(qubit_fidelity(a, b), abs=1e-12)
            assert tn == pytest.approx(fidelity(a, b), abs=1e-12)

    def test_hilbert_schmidt_bound(self, rng):
        ov = overlap_matrix(spectral(random_density(4, rng)), spectral(random_density(4, rng)))
        assert np.trace(ov @ ov.conj().T).real <= 1 + 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            overlap_matrix(spectral(random_density(2, rng)), spectral(random_density(3, rng)))


class TestThermalState:
    def test_matches_expm(self, rng):
        h = random_hermitian(4, rng)
        for beta in (0.1, 1.0, 7.0):
            ref = scipy.linalg.expm(-beta * h)
            ref /= np.trace(ref).real
            assert np.allclose(thermal_state(h, beta).matrix, ref, atol=1e-12)

    def test_high_temperature(self, rng):
        h = random_hermitian(3, rng)
        assert np.allclose(thermal_state(h, 1e-12).matrix, np.eye(3) / 3, atol=1e-10)

    def test_ground_state_at_low_temperature(self):
        rho = thermal_state(0.5 * PAULI_Z, 100.0)
        assert np.allclose(rho.matrix, np.diag([0.0, 1.0]), atol=1e-20)

    def test_two_level(self):
        rho = thermal_state(np.diag([0.0, 1.0]), 1.0)
        e = math.exp(-1)
        assert np.allclose(np.diag(rho.matrix).real, [1 / (1 + e), e / (1 + e)], atol=1e-15)

    def test_no_overflow(self):
        rho = thermal_state(np.diag([-1e4, 0.0, 1e4]), 10.0)
        assert np.all(np.isfinite(rho.matrix))

    def test_commutes(self, rng):
        h = random_hermitian(5, rng)
        rho = thermal_state(h, 0.8).matrix
        assert np.linalg.norm(rho @ h - h @ rho) < 1e-12

    def test_bad_beta(self):
        with pytest.raises(ValidationError):
            thermal_state(np.eye(2), 0.0)


class TestBloch:
    def test_centre(self):
        assert np.allclose(bloch_to_density(BlochState(0, 0, 0)).matrix, np.eye(2) / 2)

    def test_north_pole(self):
        assert np.allclose(bloch_to_density(BlochState(1, 0, 0)).matrix, np.diag([1, 0]))

    def test_equator(self):
        rho = bloch_to_density(BlochState(0.6, math.pi / 2, 0)).matrix
        assert np.allclose(rho, 0.5 * (np.eye(2) + 0.6 * PAULI_X))

    def test_determinant(self):
        b = BlochState(0.3, 1.0, 2.0)
        assert b.determinant() == pytest.approx(np.linalg.det(bloch_to_density(b).matrix).real, abs=1e-15)
        assert b.determinant() == pytest.approx(0.25 * (1 - 0.09))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            BlochState(1.1, 0, 0)
        with pytest.raises(ValidationError):
            BlochState(0.5, 0, 2 * math.pi)

    def test_qutrit_rejected(self):
        with pytest.raises(DimensionMismatch):
            bloch_vector(np.eye(3) / 3)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.01, 1.0), st.floats(0.01, math.pi - 0.01), st.floats(0.0, 2 * math.pi - 1e-3))
    def test_round_trip(self, r, theta, phi):
        b = density_to_bloch(bloch_to_density(BlochState(r, theta, phi)))
        assert b.r == pytest.approx(r, abs=1e-12)
        assert b.theta == pytest.approx(theta, abs=1e-12)
        assert b.phi == pytest.approx(phi, abs=1e-12)


class TestSampleZhsl:
    def test_deterministic(self):
        a = sample_zhsl(3, np.random.default_rng(11)).matrix
        b = sample_zhsl(3, np.random.default_rng(11)).matrix
        assert np.array_equal(a, b)

    def test_radius_uniform(self):
        rng = np.random.default_rng(2)
        r = np.array([np.linalg.norm(bloch_vector(sample_zhsl(2, rng))) for _ in range(20000)])
        counts, _ = np.histogram(r, bins=20, range=(0, 1))
        assert scipy.stats.chisquare(counts).pvalue > 1e-3

    def test_mean_purity(self):
        rng = np.random.default_rng(4)
        purity = np.mean([sample_zhsl(2, rng).purity() for _ in range(20000)])
        d1 = np.random.default_rng(5).uniform(size=200000)
        brute = np.mean(d1**2 + (1 - d1) ** 2)
        assert purity == pytest.approx(brute, abs=0.01)
        assert purity == pytest.approx(2 / 3, abs=0.01)

    def test_dim_one_rejected(self, rng):
        with pytest.raises(ValidationError):
            sample_zhsl(1, rng)


class TestFiles:
    def test_state_round_trip(self, tmp_path, rng):
        rho = sample_zhsl(3, rng)
        save_state(rho, tmp_path / "s.json")
        assert np.array_equal(load_state(tmp_path / "s.json").matrix, rho.matrix)

    def test_state_schema(self, tmp_path):
        (tmp_path / "s.json").write_text(json.dumps({"dim": 2, "re": [[0.5, 0], [0, 0.5]], "im": [[0, 0], [0, 0]]}))
        assert np.allclose(load_state(tmp_path / "s.json").matrix, np.eye(2) / 2)

    def test_bad_state_file(self, tmp_path):
        (tmp_path / "s.json").write_text(json.dumps({"dim": 3, "re": [[1, 0], [0, 0]]}))
        with pytest.raises(DimensionMismatch):
            load_state(tmp_path / "s.json")

    def test_hamiltonian_flag_required(self, tmp_path, rng):
        h = random_hermitian(2, rng)
        save_hamiltonian(h, tmp_path / "h.json")
        assert np.allclose(load_hamiltonian(tmp_path / "h.json"), h)
        (tmp_path / "s.json").write_text(json.dumps({"dim": 1, "re": [[1.0]]}))
        with pytest.raises(ValidationError):
            load_hamiltonian(tmp_path / "s.json")
