"""Contractivity experiments under random quantum channels.

Each trial draws two random states and a random channel from its own child
seed, so results depend only on ``(seed, trial index)`` and merge in trial
order whatever the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousBranchMatching, DegenerateSpectrum, DimensionMismatch, NotUnitary, ValidationError
from .linalg import dagger, haar_unitary
from .metrics import bures_angle, bures_distance, fidelity, sjoqvist_distance
from .states import as_state, matrix_to_json, sample_zhsl, state_to_json, validate_density

VIOLATION_MARGIN = 1e-9
MAX_RESAMPLES = 1000
METRICS = ("bures_distance", "bures_angle", "fidelity", "sjoqvist_distance")


@dataclass(frozen=True, eq=False)
class CPTPChannel:
    """Kraus representation ``rho -> sum_i K_i rho K_i^dagger``."""

    kraus: tuple

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=np.complex128) for k in self.kraus)
        if not ks:
            raise ValidationError("channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks):
            raise DimensionMismatch("Kraus operators differ in shape")
        object.__setattr__(self, "kraus", ks)
        res = self.completeness_residual()
        if res > 1e-10:
            raise NotUnitary(f"Kraus operators are not trace preserving: residual {res:.3e}")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[1]

    def completeness_residual(self) -> float:
        s = sum(dagger(k) @ k for k in self.kraus)
        return float(np.linalg.norm(s - np.eye(s.shape[0])))

    def apply(self, rho):
        m = as_state(rho).matrix
        out = sum(k @ m @ dagger(k) for k in self.kraus)
        return validate_density(0.5 * (out + dagger(out)), tol=1e-10)

    def to_json(self) -> list:
        return [matrix_to_json(k) for k in self.kraus]


def sample_cptp(dim_in: int, env_dim: int, rng: np.random.Generator) -> CPTPChannel:
    """Kraus blocks of a Haar-random isometry ``C^d -> C^d (x) C^env``."""
    if dim_in < 2 or env_dim < 1:
        raise ValidationError("need dim_in >= 2 and env_dim >= 1")
    v = haar_unitary(dim_in * env_dim, rng)[:, :dim_in]
    return CPTPChannel(tuple(v[i * dim_in:(i + 1) * dim_in, :] for i in range(env_dim)))


def identity_channel(dim: int) -> CPTPChannel:
    return CPTPChannel((np.eye(dim),))


def depolarizing_channel(dim: int, p: float) -> CPTPChannel:
    """``rho -> (1 - p) rho + p I/dim``, via the ``dim^2`` Weyl-Heisenberg Kraus form."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    x = np.roll(np.eye(dim), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
    ks = [math.sqrt(1.0 - p + p / dim**2) * np.eye(dim)]
    for a in range(dim):
        for b in range(dim):
            if a or b:
                ks.append(math.sqrt(p) / dim * np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(z, b))
    return CPTPChannel(tuple(ks))


# -- trials ----------------------------------------------------------------------

def _margin(metric: str, r1, r2, c1, c2, matching: str = "overlap"):
    if metric == "bures_distance":
        before, after = bures_distance(r1, r2), bures_distance(c1, c2)
    elif metric == "bures_angle":
        before, after = bures_angle(r1, r2), bures_angle(c1, c2)
    elif metric == "fidelity":
        # fidelity must not decrease, so the margin has the opposite sign
        before, after = fidelity(r1, r2), fidelity(c1, c2)
        return before, after, before - after
    elif metric == "sjoqvist_distance":
        before = sjoqvist_distance(r1, r2, matching=matching)
        after = sjoqvist_distance(c1, c2, matching=matching)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return before, after, after - before


def _draw(dim, env_dim, rng, channel):
    r1, r2 = sample_zhsl(dim, rng), sample_zhsl(dim, rng)
    ch = channel if channel is not None else sample_cptp(dim, env_dim, rng)
    return r1, r2, ch, ch.apply(r1), ch.apply(r2)


def run_trial(index: int, seed: int, dim: int, env_dim: int, metrics, channel=None,
              matching: str = "overlap") -> dict:
    """One trial; returns ``{metric: (before, after, margin, resamples, repro)}``.

    ``repro`` is ``None`` unless the margin exceeds :data:`VIOLATION_MARGIN`.
    Sjöqvist pairs are redrawn until inputs and images are nondegenerate
    and branch-matchable; the number of redraws is reported. ``matching``
    selects how Sjöqvist eigenbranches are paired (see
    :func:`~qgeo.metrics.sjoqvist_distance`).
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    base = _draw(dim, env_dim, rng, channel)
    out = {}
    for metric in metrics:
        draw, resamples = base, 0
        while True:
            try:
                r1, r2, ch, c1, c2 = draw
                before, after, margin = _margin(metric, r1, r2, c1, c2, matching)
                break
            except (DegenerateSpectrum, AmbiguousBranchMatching):
                if metric != "sjoqvist_distance" or resamples >= MAX_RESAMPLES:
                    raise
                resamples += 1
                draw = _draw(dim, env_dim, rng, channel)
        repro = None
        if margin > VIOLATION_MARGIN:
            repro = {
                "seed": int(seed), "trial": int(index),
                "states": [state_to_json(r1), state_to_json(r2)],
                "kraus": ch.to_json(),
            }
        out[metric] = (before, after, margin, resamples, repro)
    return out


def _run_chunk(args):
    indices, seed, dim, env_dim, metrics, channel, matching = args
    return [run_trial(i, seed, dim, env_dim, metrics, channel, matching) for i in indices]


@dataclass
class ContractivityReport:
    metric: str
    trials: int
    seed: int
    violations: list = field(default_factory=list)
    max_violation_margin: float = -math.inf
    resamples: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "metric": self.metric, "trials": self.trials, "seed": self.seed,
            "violation_count": len(self.violations),
            "max_violation_margin": self.max_violation_margin,
            "resamples": self.resamples, "stats": self.stats,
            "violations": self.violations,
        }


def _summarize(metric: str, seed: int, rows: list, matching: str) -> ContractivityReport:
    margins = np.array([r[2] for r in rows])
    rep = ContractivityReport(metric, len(rows), seed)
    rep.max_violation_margin = float(margins.max())
    rep.resamples = int(sum(r[3] for r in rows))
    for before, after, margin, _, repro in rows:
        if repro is not None:
            rep.violations.append({"before": before, "after": after, "margin": margin, **repro})
    rep.stats = {
        "mean_margin": float(margins.mean()),
        "min_margin": float(margins.min()),
        "max_margin": float(margins.max()),
        "nonnegative_margins": int(np.sum(margins >= 0)),
    }
    if metric == "sjoqvist_distance":
        rep.stats["branch_matching"] = matching
    return rep


def run_contractivity(metrics, trials: int, dim: int = 2, seed: int = 0, *, env_dim: int | None = None,
                      channel: CPTPChannel | None = None, workers: int = 1,
                      matching: str = "overlap") -> dict:
    """Run ``trials`` independent trials and return one report per metric.

    ``env_dim`` defaults to ``dim``. Passing ``channel`` fixes the channel
    instead of sampling one per trial. ``matching`` is the Sjöqvist
    branch-pairing rule, ``"overlap"`` or ``"eigenvalue"``.
    """
    metrics = tuple(metrics)
    for m in metrics:
        if m not in METRICS:
            raise ValueError(f"unknown metric {m!r}")
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    env_dim = dim if env_dim is None else env_dim
    if workers > 1:
        chunks = [list(c) for c in np.array_split(np.arange(trials), workers) if c.size]
        args = [(c, seed, dim, env_dim, metrics, channel, matching) for c in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [row for part in pool.map(_run_chunk, args) for row in part]
    else:
        results = _run_chunk((range(trials), seed, dim, env_dim, metrics, channel, matching))
    return {m: _summarize(m, seed, [r[m] for r in results], matching) for m in metrics}


def _seed_from(rng) -> int:
    return int(rng.integers(0, 2**63)) if rng is not None else 0


def check_contractivity(metric: str, trials: int, dim: int, rng: np.random.Generator | None = None,
                        **kwargs) -> ContractivityReport:
    """Contractivity report for one of ``bures_distance``, ``bures_angle`` or
    ``sjoqvist_distance``; margin is ``d(after) - d(before)``."""
    if metric == "fidelity":
        raise ValueError("use fidelity_monotonicity_check for fidelity")
    seed = kwargs.pop("seed", None)
    seed = _seed_from(rng) if seed is None else seed
    return run_contractivity([metric], trials, dim, seed, **kwargs)[metric]


def fidelity_monotonicity_check(trials: int, dim: int, rng: np.random.Generator | None = None,
                                **kwargs) -> ContractivityReport:
    """Like :func:`check_contractivity` with margin ``F(before) - F(after)``."""
    seed = kwargs.pop("seed", None)
    seed = _seed_from(rng) if seed is None else seed
    return run_contractivity(["fidelity"], trials, dim, seed, **kwargs)["fidelity"]
