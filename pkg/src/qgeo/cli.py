"""Command-line front end: ``qgeo <command> [options]``.

Every command writes a deterministic document. JSON output is
``{"schema": "qgeo.v1", "command": ..., "records": [...]}`` with floats at 17
significant digits; CSV output has one row per record and a header row.

Exit codes: 0 success, 2 invalid input, 3 domain error (e.g. degenerate
spectrum), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import SCHEMA_VERSION
from .bloch import (
    GeodesicEndpoints,
    check_normalization,
    check_operator_monotone,
    check_self_inversive,
    f_bures,
    f_sjoqvist,
    f_zhsl,
    fubini_study_length,
    geodesic_length,
    pinned_counterexample,
    zhsl_normalization,
)
from .errors import DomainError, QGeoError, ValidationError
from .linalg import DEGENERACY_TOL
from .metrics import bures_angle, bures_distance, fidelity, generalized_sjoqvist_distance, sjoqvist_distance
from .monotonicity import METRICS, run_contractivity
from .spin_qubit import FieldParams, analytic_metric, diagnose_degeneracy
from .states import load_state, matrix_to_json, sample_zhsl, state_to_json

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4

THERMAL_COLUMNS = (
    "beta", "omega_z", "omega_x", "omega_y", "hbar", "half_gap",
    "sjoqvist_g11", "sjoqvist_g12", "sjoqvist_g22", "sjoqvist_nonclassical_g22",
    "sjoqvist_eig_min", "sjoqvist_eig_max", "sjoqvist_det", "sjoqvist_degenerate",
    "bures_g11", "bures_g12", "bures_g22", "bures_nonclassical_g22",
    "bures_eig_min", "bures_eig_max", "bures_det", "bures_degenerate",
    "tanh2", "ratio",
)


# -- output -------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj) -> str:
    """JSON with round-trip floats (17 significant digits); non-finite floats become null."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _flatten(rec: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = dumps(v)
        else:
            out[key] = v
    return out


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        s = _fmt_float(float(v))
        return "" if s == "null" else s
    return str(v)


def render(command: str, records: list, fmt: str, columns=None) -> str:
    records = [{"schema": SCHEMA_VERSION, **r} for r in records]
    if fmt == "json":
        return dumps({"schema": SCHEMA_VERSION, "command": command, "records": records}) + "\n"
    flat = [_flatten(r) for r in records]
    if columns is None:
        columns = []
        for r in flat:
            columns.extend(k for k in r if k not in columns)
    else:
        columns = ["schema", *columns]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in flat:
        w.writerow([_csv_cell(r.get(c)) for c in columns])
    return buf.getvalue()


# -- argument helpers -------------------------------------------------------------------

def parse_grid(text: str) -> np.ndarray:
    """``"start:stop:steps"`` (steps >= 2, inclusive endpoints) or a single value."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            vals = np.array([float(parts[0])])
        elif len(parts) == 3:
            start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
            if steps < 2:
                raise ValidationError(f"grid {text!r}: steps must be >= 2")
            if not (math.isfinite(start) and math.isfinite(stop)):
                raise ValidationError(f"grid {text!r} has non-finite endpoints")
            vals = np.linspace(start, stop, steps)
        else:
            raise ValidationError(f"grid {text!r}: expected 'start:stop:steps' or a value")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed grid {text!r}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ValidationError(f"grid {text!r} has non-finite values")
    return vals


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"malformed number list {text!r}") from exc


# -- commands -------------------------------------------------------------------------

def cmd_distance(args):
    a, b = load_state(args.state_a), load_state(args.state_b)
    if a.dim != b.dim:
        raise ValidationError(f"state dimensions differ: {a.dim} vs {b.dim}")
    rec = {"dim": a.dim}
    status = EXIT_OK
    try:
        rec["sjoqvist"] = sjoqvist_distance(a, b, degeneracy_tol=args.tol_degeneracy)
    except DomainError as exc:
        rec["sjoqvist"] = None
        rec["sjoqvist_error"] = str(exc)
        status = EXIT_DOMAIN
    gen = generalized_sjoqvist_distance(a, b)
    bur = bures_distance(a, b)
    rec.update({
        "generalized_sjoqvist": gen,
        "bures": bur,
        "fidelity": fidelity(a, b),
        "bures_angle": bures_angle(a, b),
        "consistency_residual": abs(gen - bur),
    })
    return [rec], status, None


def _betas(args) -> np.ndarray:
    if args.temperature is not None:
        temps = parse_grid(args.temperature)
        if np.any(temps <= 0) or args.kb <= 0:
            raise ValidationError("temperatures and kb must be positive")
        return 1.0 / (args.kb * temps)
    return parse_grid(args.beta)


def thermal_record(p: FieldParams) -> dict:
    rec = {"beta": p.beta, "omega_z": p.omega_z, "omega_x": p.omega_x, "omega_y": p.omega_y,
           "hbar": p.hbar, "half_gap": p.half_gap}
    nc = {}
    for kind in ("sjoqvist", "bures"):
        m = analytic_metric(p, kind)
        d = diagnose_degeneracy(m)
        nc[kind] = m.nonclassical_g22
        rec.update({
            f"{kind}_g11": m.g[0, 0], f"{kind}_g12": m.g[0, 1], f"{kind}_g22": m.g[1, 1],
            f"{kind}_nonclassical_g22": m.nonclassical_g22,
            f"{kind}_eig_min": d.eigenvalues[0], f"{kind}_eig_max": d.eigenvalues[1],
            f"{kind}_det": d.determinant, f"{kind}_degenerate": d.degenerate,
        })
    tanh2 = math.tanh(p.half_gap) ** 2
    rec["tanh2"] = tanh2
    # a z-aligned field makes both nonclassical terms vanish; report the limit
    rec["ratio"] = nc["bures"] / nc["sjoqvist"] if nc["sjoqvist"] > 0 else tanh2
    return rec


def cmd_thermal_sweep(args):
    betas = _betas(args)
    omegas = parse_grid(args.omega_z)
    records = []
    for beta in betas:
        for wz in omegas:
            p = FieldParams(args.omega_x, args.omega_y, float(wz), float(beta), args.hbar)
            records.append(thermal_record(p))
    return records, EXIT_OK, THERMAL_COLUMNS


def cmd_mc_analyze(args):
    rng = np.random.default_rng(args.seed)
    ts = np.exp(rng.uniform(-6.0, 6.0, args.samples))
    funcs = [f_bures, f_sjoqvist] + [f_zhsl(nu) for nu in _float_list(args.nu)]
    records = []
    for f in funcs:
        norm = check_normalization(f)
        inv = check_self_inversive(f, ts)
        pinned = pinned_counterexample(f)
        mono = None
        for dim in range(2, args.max_dim + 1):
            mono = check_operator_monotone(f, dim, args.trials, rng)
            if mono.violation_found:
                break
        rec = {
            "function": f.name,
            "f_at_one": f.value_at_one,
            "normalized": norm.passed,
            "self_inversive_residual": inv.residual,
            "self_inversive": inv.passed,
            "pinned_min_eigenvalue": pinned.min_eigenvalue,
            "pinned_violation": pinned.violation_found,
            "random_search": mono.verdict,
            "random_violation": mono.violation_found,
            "random_min_eigenvalue": mono.min_eigenvalue,
        }
        if mono.counterexample is not None:
            rec["counterexample"] = {"a": matrix_to_json(mono.counterexample[0]),
                                     "b": matrix_to_json(mono.counterexample[1])}
        records.append(rec)
    half = f_zhsl(0.5)
    records.append({
        "function": "zhsl(0.5) vs sjoqvist",
        "max_abs_difference": float(np.max(np.abs(half(ts) - f_sjoqvist(ts)))),
        "normalization": zhsl_normalization(0.5),
        "normalization_expected": 1.0 / (2.0 * math.pi**2),
    })
    return records, EXIT_OK, None


def cmd_monotonicity(args):
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    bad = [m for m in metrics if m not in METRICS]
    if bad or not metrics:
        raise ValidationError(f"unknown metrics {bad}; choose from {METRICS}")
    if args.trials < 1 or args.dim < 2 or (args.env_dim is not None and args.env_dim < 1):
        raise ValidationError("need trials >= 1, dim >= 2, env-dim >= 1")
    reports = run_contractivity(metrics, args.trials, args.dim, args.seed,
                                env_dim=args.env_dim, workers=args.workers, matching=args.matching)
    return [reports[m].to_dict() for m in metrics], EXIT_OK, None


def cmd_geodesic(args):
    e = GeodesicEndpoints(args.r_a, args.r_b, args.theta_b)
    return [{
        "r_a": e.r_a, "r_b": e.r_b, "theta_b": e.theta_b,
        "bures": geodesic_length("bures", e),
        "sjoqvist": geodesic_length("sjoqvist", e),
        "fubini_study": fubini_study_length(e.theta_b),
        "pure_endpoints": e.r_a == 1.0 and e.r_b == 1.0,
    }], EXIT_OK, None


def cmd_sample(args):
    if args.dim < 2 or args.count < 1:
        raise ValidationError("need dim >= 2 and count >= 1")
    rng = np.random.default_rng(args.seed)
    return [{"index": i, **state_to_json(sample_zhsl(args.dim, rng))} for i in range(args.count)], EXIT_OK, None


# -- parser ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="RNG seed for stochastic commands")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    p.add_argument("--tol-degeneracy", type=float, default=DEGENERACY_TOL)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--kb", type=float, default=1.0)
    p.add_argument("--config", type=Path, default=None, help="flat key = value file; flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qgeo", description="Quantum state metrics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distance", parents=[common], help="all distances between two state files")
    p.add_argument("state_a", type=Path)
    p.add_argument("state_b", type=Path)
    p.set_defaults(handler=cmd_distance)

    p = sub.add_parser("thermal-sweep", parents=[common], help="spin-qubit metric tensors over a (beta, omega_z) grid")
    p.add_argument("--omega-x", type=float, default=1.0)
    p.add_argument("--omega-y", type=float, default=0.0)
    p.add_argument("--omega-z", default="1.0", help="value or start:stop:steps")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--beta", default="1.0", help="value or start:stop:steps")
    grp.add_argument("--temperature", default=None, help="value or start:stop:steps; beta = 1/(kb T)")
    p.set_defaults(handler=cmd_thermal_sweep)

    p = sub.add_parser("mc-analyze", parents=[common], help="monotone-metric function verdicts")
    p.add_argument("--trials", type=int, default=1000, help="random operator-monotonicity trials per dimension")
    p.add_argument("--max-dim", type=int, default=4)
    p.add_argument("--samples", type=int, default=1000, help="sample points for self-inversion")
    p.add_argument("--nu", default="0.5,1,2", help="comma-separated ZHSL parameters")
    p.set_defaults(handler=cmd_mc_analyze)

    p = sub.add_parser("monotonicity", parents=[common], help="contractivity under random channels")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--env-dim", type=int, default=None)
    p.add_argument("--metrics", default=",".join(METRICS))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--matching", choices=("overlap", "eigenvalue"), default="overlap",
                   help="Sjöqvist eigenbranch pairing rule")
    p.set_defaults(handler=cmd_monotonicity)

    p = sub.add_parser("geodesic", parents=[common], help="geodesic lengths between xz-plane Bloch points")
    p.add_argument("--r-a", type=float, required=True)
    p.add_argument("--r-b", type=float, required=True)
    p.add_argument("--theta-b", type=float, required=True)
    p.set_defaults(handler=cmd_geodesic)

    p = sub.add_parser("sample", parents=[common], help="random states from the ZHSL measure")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(handler=cmd_sample)
    return parser


def read_config(path: Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; keys may use dashes."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    """Install values from ``--config`` as defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if command is None:
        return
    subparser = choices[command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for k, v in read_config(known.config).items():
        if k not in actions or k in ("help", "config", "handler"):
            raise ValidationError(f"unknown config key {k!r} for {command}")
        conv = actions[k].type
        try:
            defaults[k] = conv(v) if conv is not None else v
        except ValueError as exc:
            raise ValidationError(f"config key {k!r}: {exc}") from exc
        actions[k].required = False
    subparser.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValidationError, OSError) as exc:
        print(f"qgeo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        records, status, columns = args.handler(args)
        text = render(args.command, records, args.format, columns)
        if args.out is not None:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
        return status
    except DomainError as exc:
        print(f"qgeo: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as exc:
        print(f"qgeo: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QGeoError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"qgeo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
