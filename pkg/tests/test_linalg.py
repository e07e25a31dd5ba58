import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_density, random_hermitian
from qgeo.errors import DimensionMismatch, NotHermitian, NotPSD, SingularMatrix, ValidationError
from qgeo.linalg import (
    as_matrix,
    eig_hermitian,
    fix_gauge,
    haar_unitary,
    hermitian_function,
    is_unitary,
    polar_unitary,
    psd_sqrt,
    spectrum_is_nondegenerate,
    trace_norm,
)


class TestAsMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            as_matrix(np.zeros((2, 3)))

    def test_rejects_vector(self):
        with pytest.raises(DimensionMismatch):
            as_matrix(np.zeros(3))

    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            as_matrix([[np.nan, 0], [0, 1]])

    def test_rejects_oversized(self):
        with pytest.raises(DimensionMismatch):
            as_matrix(np.eye(65))


class TestEigHermitian:
    def test_reconstructs(self, rng):
        h = random_hermitian(5, rng)
        es = eig_hermitian(h)
        assert np.allclose(es.reconstruct(), h, atol=1e-12)
        assert np.all(np.diff(es.eigenvalues) >= 0)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitian):
            eig_hermitian([[0, 1], [0, 0]])

    def test_gauge_is_deterministic(self, rng):
        h = random_hermitian(4, rng)
        v1 = eig_hermitian(h).eigenvectors
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        v2 = fix_gauge(v1 * phases)
        assert np.allclose(v1, v2, atol=1e-13)
        big = np.argmax(np.abs(v1), axis=0)
        pivots = v1[big, np.arange(4)]
        assert np.allclose(pivots.imag, 0, atol=1e-15)
        assert np.all(pivots.real > 0)

    def test_degenerate_flag(self):
        es = eig_hermitian(np.diag([1.0, 1.0, 2.0]))
        assert es.degenerate()
        assert not eig_hermitian(np.diag([1.0, 1.5, 2.0])).degenerate()


class TestSpectrumGaps:
    def test_scale_relative(self):
        assert not spectrum_is_nondegenerate([0.0, 1e-11])
        assert spectrum_is_nondegenerate([0.0, 1e-9])
        assert not spectrum_is_nondegenerate([0.0, 1e-9], scale=100.0)

    def test_single_eigenvalue(self):
        assert spectrum_is_nondegenerate([3.0])


class TestPsdSqrt:
    def test_matches_scipy(self, rng):
        rho = random_density(4, rng)
        r = psd_sqrt(rho)
        assert np.allclose(r, scipy.linalg.sqrtm(rho), atol=1e-12)
        assert np.allclose(r @ r, rho, atol=1e-13)

    def test_rank_deficient(self, rng):
        rho = random_density(3, rng, rank=1)
        r = psd_sqrt(rho)
        assert np.allclose(r @ r, rho, atol=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(NotPSD):
            psd_sqrt(np.diag([1.0, -1e-6]))

    def test_rounding_noise_clamped(self):
        r = psd_sqrt(np.diag([1.0, -1e-15]))
        assert np.allclose(r, np.diag([1.0, 0.0]))


class TestTraceNormAndPolar:
    def test_trace_norm_hermitian(self, rng):
        h = random_hermitian(4, rng)
        assert trace_norm(h) == pytest.approx(np.sum(np.abs(np.linalg.eigvalsh(h))), rel=1e-13)

    def test_polar_matches_scipy(self, rng):
        m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        u = polar_unitary(m)
        u_ref, p_ref = scipy.linalg.polar(m, side="left")
        assert np.allclose(u, u_ref, atol=1e-12)
        assert np.allclose(p_ref @ u, m, atol=1e-12)

    def test_polar_singular(self):
        with pytest.raises(SingularMatrix):
            polar_unitary(np.diag([1.0, 0.0]))


class TestHaar:
    @pytest.mark.parametrize("dim", [1, 2, 5])
    def test_unitary(self, dim, rng):
        assert is_unitary(haar_unitary(dim, rng), tol=1e-12)

    def test_seeded(self):
        a = haar_unitary(3, np.random.default_rng(5))
        b = haar_unitary(3, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_first_moment(self):
        # E|U_00|^2 = 1/d for Haar unitaries
        rng = np.random.default_rng(0)
        vals = [abs(haar_unitary(3, rng)[0, 0]) ** 2 for _ in range(4000)]
        assert np.mean(vals) == pytest.approx(1 / 3, abs=0.015)

    def test_phase_distribution_uniform(self):
        # without the R-diagonal correction the phase of U_00 is biased
        rng = np.random.default_rng(1)
        phases = np.array([np.angle(haar_unitary(2, rng)[0, 0]) for _ in range(4000)])
        assert abs(np.mean(np.exp(1j * phases))) < 0.05


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_hermitian_function_matches_expm(dim, seed):
    h = random_hermitian(dim, np.random.default_rng(seed))
    assert np.allclose(hermitian_function(h, np.exp), scipy.linalg.expm(h), rtol=1e-10, atol=1e-10)
