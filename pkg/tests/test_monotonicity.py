import numpy as np
import pytest

from qgeo.errors import NotUnitary, ValidationError
from qgeo.metrics import sjoqvist_distance
from qgeo.monotonicity import (
    CPTPChannel,
    check_contractivity,
    depolarizing_channel,
    fidelity_monotonicity_check,
    identity_channel,
    run_contractivity,
    run_trial,
    sample_cptp,
)
from qgeo.states import sample_zhsl, state_from_json, matrix_from_json


class TestChannels:
    @pytest.mark.parametrize("dim,env", [(2, 1), (2, 4), (3, 2), (4, 16)])
    def test_trace_preserving(self, dim, env, rng):
        ch = sample_cptp(dim, env, rng)
        assert len(ch.kraus) == env
        assert ch.completeness_residual() < 1e-10

    def test_env_one_is_unitary(self, rng):
        (k,) = sample_cptp(3, 1, rng).kraus
        assert np.allclose(k.conj().T @ k, np.eye(3), atol=1e-12)

    def test_seeded(self):
        a = sample_cptp(2, 3, np.random.default_rng(9))
        b = sample_cptp(2, 3, np.random.default_rng(9))
        assert all(np.array_equal(x, y) for x, y in zip(a.kraus, b.kraus))

    def test_full_kraus_rank(self):
        rng = np.random.default_rng(1)
        ranks = []
        for _ in range(1000):
            ch = sample_cptp(2, 4, rng)
            ranks.append(np.linalg.matrix_rank(np.array([k.ravel() for k in ch.kraus]), tol=1e-10))
        assert np.mean(np.array(ranks) == 4) > 0.99

    def test_output_valid(self, rng):
        ch = sample_cptp(3, 3, rng)
        out = ch.apply(sample_zhsl(3, rng))
        assert np.trace(out.matrix).real == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_trace_preserving(self):
        with pytest.raises(NotUnitary):
            CPTPChannel((0.5 * np.eye(2),))

    def test_depolarizing(self, rng):
        rho = sample_zhsl(3, rng)
        out = depolarizing_channel(3, 0.4).apply(rho).matrix
        assert np.allclose(out, 0.6 * rho.matrix + 0.4 * np.eye(3) / 3, atol=1e-13)
        full = depolarizing_channel(2, 1.0).apply(sample_zhsl(2, rng)).matrix
        assert np.allclose(full, np.eye(2) / 2, atol=1e-13)

    def test_validation(self, rng):
        with pytest.raises(ValidationError):
            sample_cptp(1, 2, rng)
        with pytest.raises(ValidationError):
            depolarizing_channel(2, 1.5)


class TestContractivity:
    def test_identity_channel_zero_margin(self):
        reports = run_contractivity(["bures_distance", "bures_angle", "fidelity", "sjoqvist_distance"],
                                    50, 2, seed=3, channel=identity_channel(2))
        for rep in reports.values():
            assert rep.stats["max_margin"] == 0.0 and rep.stats["min_margin"] == 0.0

    def test_depolarizing_contracts(self):
        rep = check_contractivity("bures_distance", 200, 2, seed=5, channel=depolarizing_channel(2, 0.3))
        assert rep.stats["max_margin"] <= 0.0

    @pytest.mark.parametrize("metric", ["bures_distance", "bures_angle"])
    def test_bures_no_violations(self, metric):
        rep = check_contractivity(metric, 500, 2, np.random.default_rng(0))
        assert rep.passed and rep.violations == []

    def test_bures_qutrit(self):
        rep = check_contractivity("bures_distance", 200, 3, seed=1)
        assert rep.passed

    def test_fidelity_no_decrease(self):
        rep = fidelity_monotonicity_check(500, 2, seed=2)
        assert rep.passed
        assert rep.stats["max_margin"] <= 1e-9

    def test_fidelity_completely_depolarizing(self, rng):
        rep = fidelity_monotonicity_check(50, 2, seed=4, channel=depolarizing_channel(2, 1.0))
        assert rep.passed

    def test_deterministic_and_worker_independent(self):
        a = run_contractivity(["bures_distance", "sjoqvist_distance"], 40, 2, seed=11)
        b = run_contractivity(["bures_distance", "sjoqvist_distance"], 40, 2, seed=11, workers=2)
        for m in a:
            assert a[m].to_dict() == b[m].to_dict()

    def test_sjoqvist_violation_reproducible(self):
        rep = check_contractivity("sjoqvist_distance", 300, 2, seed=12345)
        assert rep.stats["branch_matching"] == "overlap"
        assert rep.resamples >= 0
        for v in rep.violations[:5]:
            again = run_trial(v["trial"], v["seed"], 2, 2, ["sjoqvist_distance"])["sjoqvist_distance"]
            assert again[2] == v["margin"]
            r1, r2 = (state_from_json(s) for s in v["states"])
            ch = CPTPChannel(tuple(matrix_from_json(k) for k in v["kraus"]))
            assert sjoqvist_distance(ch.apply(r1), ch.apply(r2)) - sjoqvist_distance(r1, r2) == pytest.approx(
                v["margin"], abs=1e-12)

    def test_fidelity_rejected_by_distance_check(self):
        with pytest.raises(ValueError):
            check_contractivity("fidelity", 1, 2)

    def test_unknown_metric(self):
        with pytest.raises(ValueError):
            run_contractivity(["trace_distance"], 1, 2)

    def test_margin_sign_fidelity(self):
        out = run_trial(0, 0, 2, 2, ["fidelity"])["fidelity"]
        before, after, margin = out[:3]
        assert margin == before - after
        assert 0 <= before <= 1
