"""Command-line front end: surface/curve/critical/dims tables and simulation runs.

Every command emits machine-readable data in one of two formats (CSV with a
header row, or JSON shaped {"manifest": ..., "data": ...}) plus a manifest
sidecar recording the full parameter set, seed, quadrature resolution, tool
version and wall-clock duration.  Re-running a command with the manifest's
parameters reproduces the data files byte for byte.

Angles in output files are always radians.  Input angle flags accept radians
by default or degrees with an explicit ``deg`` suffix (e.g. ``--theta 22.5deg``).

Exit codes: 0 success, 1 usage error, 2 numerical/bracket failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Sequence

import numpy as np

from . import __version__
from .attack import AttackParams, attacked_state, bipartite_reductions
from .infocalc import SphereQuadrature, nonselected_information
from .protosim import (
    ProtocolConfig,
    SiftingPartition,
    empirical_mi,
    empirical_mi_with_probe,
    run_protocol,
    sift,
    sifted_error_rate,
    write_transcript,
)
from .qstate import NumericalCorruptionError
from .security import (
    NONSELECTED_MAX_BITS,
    QUARTER_PI,
    RECONCILED_MAX_BITS,
    BracketError,
    cier,
    critical_point,
    dimension_table,
    optimal_params,
    pair_fidelity_deficit,
    qber,
    qber_sphere_averaged,
    reconciled_i_ab,
    sweep_curve,
)

USAGE_ERROR, NUMERICAL_ERROR, IO_ERROR = 1, 2, 3

# Default binning of the cross-validation information estimate in `simulate`:
# fine enough to track the continuous value, coarse enough that the
# Miller-Madow-corrected histogram estimator is unbiased at 1e5 rounds.
MI_CELLS_U, MI_CELLS_PHI = 8, 16


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise _UsageError(message)


def _parse_angle(text: str) -> float:
    """Radians by default; an explicit 'deg' or 'rad' suffix is honored."""
    s = text.strip().lower()
    try:
        if s.endswith("deg"):
            return math.radians(float(s[:-3]))
        if s.endswith("rad"):
            return float(s[:-3])
        return float(s)
    except ValueError:
        raise _UsageError(f"cannot parse angle {text!r}") from None


def _py(value: Any) -> Any:
    """Coerce numpy scalars to plain Python for stable repr/json output."""
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def _fmt(value: Any) -> str:
    value = _py(value)
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _manifest(command: str, params: dict, seed: int | None, quad: tuple[int, int] | None) -> dict:
    return {
        "command": command,
        "parameters": {k: _py(v) for k, v in params.items()},
        "seed": seed,
        "quadrature": list(quad) if quad else None,
        "version": __version__,
    }


def _write_manifest(path: str, manifest: dict, started: float) -> None:
    body = dict(manifest)
    body["wall_seconds"] = time.monotonic() - started
    with open(path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_table(
    path: str, fmt: str, manifest: dict, columns: Sequence[str], rows: Sequence[Sequence[Any]]
) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
    else:
        payload = {
            "manifest": manifest,
            "data": {"columns": list(columns), "rows": [[_py(x) for x in row] for row in rows]},
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _quad_from_args(args: argparse.Namespace) -> SphereQuadrature:
    return SphereQuadrature.gauss_product(args.quad_polar, args.quad_azimuth)


def _add_common(p: argparse.ArgumentParser, output_required: bool = True) -> None:
    p.add_argument("--quad-polar", type=int, default=32, help="Gauss-Legendre nodes in cos(theta)")
    p.add_argument("--quad-azimuth", type=int, default=64, help="uniform azimuth nodes")
    p.add_argument("--output", required=output_required, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")


def _cmd_surface(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if args.theta_steps < 2 or args.phi_steps < 2:
        raise _UsageError("grid needs at least 2 steps per axis")
    quad = _quad_from_args(args)
    thetas = np.linspace(0.0, QUARTER_PI, args.theta_steps)
    phis = np.linspace(0.0, QUARTER_PI, args.phi_steps)
    rows = []
    for t in thetas:
        for p in phis:
            st = attacked_state(AttackParams(float(t), float(p)))
            rab, rae, rbe = bipartite_reductions(st)
            rows.append(
                (
                    float(t),
                    float(p),
                    nonselected_information(rab, quad, quad),
                    nonselected_information(rae, quad, quad),
                    nonselected_information(rbe, quad, quad),
                )
            )
    manifest = _manifest(
        "surface",
        {
            "theta_steps": args.theta_steps,
            "phi_steps": args.phi_steps,
            "format": args.format,
            "output": args.output,
        },
        None,
        (args.quad_polar, args.quad_azimuth),
    )
    _write_table(args.output, args.format, manifest, ("theta", "phi", "i_ab", "i_ae", "i_be"), rows)
    _write_manifest(args.output, manifest, started)
    return 0


def _cmd_curve(args: argparse.Namespace) -> int:
    started = time.monotonic()
    if args.theta_steps < 2:
        raise _UsageError("curve needs at least 2 grid points")
    quad = _quad_from_args(args)
    grid = np.linspace(0.0, QUARTER_PI, args.theta_steps)
    curve = sweep_curve(grid, reconciled=args.reconciled, quad=quad)
    i_max = RECONCILED_MAX_BITS if args.reconciled else NONSELECTED_MAX_BITS
    rows = []
    for k, t in enumerate(curve.thetas):
        rows.append(
            (
                float(t),
                float(curve.i_ab[k]),
                float(curve.i_ae[k]),
                float(curve.i_be[k]),
                qber(optimal_params(float(t))),
                cier(float(curve.i_ab[k]), i_max),
            )
        )
    manifest = _manifest(
        "curve",
        {
            "theta_steps": args.theta_steps,
            "reconciled": args.reconciled,
            "format": args.format,
            "output": args.output,
        },
        None,
        (args.quad_polar, args.quad_azimuth),
    )
    _write_table(
        args.output, args.format, manifest, ("theta", "i_ab", "i_ae", "i_be", "qber", "cier"), rows
    )
    _write_manifest(args.output, manifest, started)
    return 0


def critical_report(reconciled: bool, quad: SphereQuadrature, tol: float) -> dict:
    """Threshold summary with every error-rate reading spelled out."""
    report = critical_point(reconciled=reconciled, quad=quad, tol=tol)
    params0 = optimal_params(report.theta0)
    sin_reading = math.sin(report.theta0)
    sin_sq_reading = math.sin(report.theta0) ** 2
    return {
        "reconciled": report.reconciled,
        "theta0": report.theta0,
        "i0_bits": report.i0,
        "qber0": report.q0,
        "cier0": report.q_cier0,
        "i_max_bits": RECONCILED_MAX_BITS if reconciled else NONSELECTED_MAX_BITS,
        "cier_normalizations": {
            "continuous_readout_max": cier(report.i0, NONSELECTED_MAX_BITS)
            if report.i0 <= NONSELECTED_MAX_BITS * (1 + 1e-6)
            else None,
            "reconciled_max": cier(report.i0, RECONCILED_MAX_BITS),
        },
        "disturbance_readings": {
            "transmission_basis": report.q0,
            "sphere_averaged": qber_sphere_averaged(params0, quad),
            "pair_fidelity_deficit": pair_fidelity_deficit(params0),
            "note": (
                "historical threshold readings are ambiguous: sin(theta0)="
                f"{sin_reading!r} vs sin(theta0)^2={sin_sq_reading!r}; the computed "
                "transmission-basis error matches the squared form"
            ),
        },
    }


def _cmd_critical(args: argparse.Namespace) -> int:
    started = time.monotonic()
    quad = _quad_from_args(args)
    data = critical_report(args.reconciled, quad, args.tol)
    manifest = _manifest(
        "critical",
        {"reconciled": args.reconciled, "tol": args.tol, "format": args.format},
        None,
        (args.quad_polar, args.quad_azimuth),
    )
    payload = {"manifest": manifest, "data": data}
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.output:
        if args.format == "csv":
            cols = ("reconciled", "theta0", "i0_bits", "qber0", "cier0", "i_max_bits")
            _write_table(args.output, "csv", manifest, cols, [[data[c] for c in cols]])
        else:
            with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text + "\n")
        _write_manifest(args.output, manifest, started)
    return 0


def _cmd_dims(args: argparse.Namespace) -> int:
    started = time.monotonic()
    ds, acc, imax, q = dimension_table(args.d_max)
    rows = [
        (int(ds[i]), float(acc[i]), float(imax[i]), float(q[i])) for i in range(ds.size)
    ]
    manifest = _manifest(
        "dims", {"d_max": args.d_max, "format": args.format, "output": args.output}, None, None
    )
    _write_table(
        args.output, args.format, manifest, ("d", "accessible_bits", "i_max_bits", "critical_cier"), rows
    )
    _write_manifest(args.output, manifest, started)
    return 0


def simulate_summary(
    cfg: ProtocolConfig,
    quad: SphereQuadrature,
    mi_binning: SiftingPartition,
    transcript=None,
) -> dict:
    """Run the protocol (unless a transcript is given) and summarize it."""
    if transcript is None:
        transcript = run_protocol(cfg)
    partition = SiftingPartition(cfg.cells_u, cfg.cells_phi)
    sifted = sift(transcript, partition)
    bitwise = SiftingPartition(1, 1)

    mi_ab = empirical_mi(transcript, mi_binning, mi_binning, miller_madow=True, fold_antipodal=True)
    mi_ae = empirical_mi_with_probe(transcript, mi_binning, "alice", miller_madow=True, fold_antipodal=True)
    mi_be = empirical_mi_with_probe(transcript, mi_binning, "bob", miller_madow=True, fold_antipodal=True)

    on_line = abs(cfg.attack.theta + cfg.attack.phi - QUARTER_PI) < 1e-9
    reference = None
    verdict_reference = None
    if on_line:
        st = attacked_state(cfg.attack)
        rab, rae, rbe = bipartite_reductions(st)
        ref_ab = nonselected_information(rab, quad, quad)
        ref_ae = nonselected_information(rae, quad, quad)
        ref_be = nonselected_information(rbe, quad, quad)
        reference = {
            "i_ab_bits": ref_ab,
            "i_ae_bits": ref_ae,
            "i_be_bits": ref_be,
            "qber": qber(cfg.attack),
            "qber_sphere_averaged": qber_sphere_averaged(cfg.attack, quad),
        }
        verdict_reference = bool(ref_ab > max(ref_ae, ref_be))

    summary = {
        "rounds": cfg.rounds,
        "attack": {"theta": cfg.attack.theta, "phi": cfg.attack.phi},
        "on_optimal_line": on_line,
        "disclosed_rounds": int(transcript.disclosed.sum()),
        "unsifted": {
            "mi_alice_bob_bits": mi_ab,
            "mi_alice_probe_bits": mi_ae,
            "mi_bob_probe_bits": mi_be,
            "binning_cells": [mi_binning.cells_u, mi_binning.cells_phi],
            "miller_madow": True,
            "fold_antipodal": True,
        },
        "sifted": {
            "cells": [cfg.cells_u, cfg.cells_phi],
            "kept_rounds": len(sifted),
            "keep_rate": len(sifted) / len(transcript),
            "expected_keep_rate": partition.expected_keep_rate(),
            "mi_bits": empirical_mi(sifted, bitwise, bitwise, miller_madow=True)
            if len(sifted)
            else None,
            "error_rate": sifted_error_rate(sifted) if len(sifted) else None,
        },
        "quadrature_reference": reference,
        "security_verdict": {
            "empirical_i_ab_dominates": bool(mi_ab > max(mi_ae, mi_be)),
            "quadrature_i_ab_dominates": verdict_reference,
        },
    }
    return summary


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    phi = args.phi if args.phi is not None else QUARTER_PI - args.theta
    cfg = ProtocolConfig(
        rounds=args.rounds,
        attack=AttackParams(args.theta, phi),
        cells_u=args.cells_u,
        cells_phi=args.cells_phi,
        seed=args.seed,
        disclose_fraction=args.disclose_fraction,
    )
    quad = _quad_from_args(args)
    mi_binning = SiftingPartition(args.mi_cells_u, args.mi_cells_phi)

    transcript = run_protocol(cfg)
    summary = simulate_summary(cfg, quad, mi_binning, transcript=transcript)

    manifest = _manifest(
        "simulate",
        {
            "rounds": cfg.rounds,
            "theta": cfg.attack.theta,
            "phi": cfg.attack.phi,
            "cells_u": cfg.cells_u,
            "cells_phi": cfg.cells_phi,
            "disclose_fraction": cfg.disclose_fraction,
            "mi_cells_u": args.mi_cells_u,
            "mi_cells_phi": args.mi_cells_phi,
            "format": args.format,
            "output": args.output,
        },
        cfg.seed,
        (args.quad_polar, args.quad_azimuth),
    )
    if args.format == "csv":
        write_transcript(transcript, args.output)
    else:
        fields = (
            "round",
            "disclosed",
            "alice_u",
            "alice_phi",
            "alice_bit",
            "bob_u",
            "bob_phi",
            "bob_bit",
            "eve_bit",
        )
        rows = [
            [
                i,
                int(transcript.disclosed[i]),
                float(transcript.alice_u[i]),
                float(transcript.alice_phi[i]),
                int(transcript.alice_bit[i]),
                float(transcript.bob_u[i]),
                float(transcript.bob_phi[i]),
                int(transcript.bob_bit[i]),
                int(transcript.eve_bit[i]),
            ]
            for i in range(len(transcript))
        ]
        _write_table(args.output, "json", manifest, fields, rows)
    with open(args.output + ".summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"manifest": manifest, "summary": summary}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.output, manifest, started)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="contqkd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("surface", help="information rates over the attack-angle square")
    p.add_argument("--theta-steps", type=int, default=17)
    p.add_argument("--phi-steps", type=int, default=17)
    _add_common(p)
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("curve", help="rates along the optimal-eavesdropping line")
    p.add_argument("--theta-steps", type=int, default=33)
    p.add_argument("--reconciled", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("critical", help="security threshold on the optimal line")
    p.add_argument("--reconciled", action="store_true")
    p.add_argument("--tol", type=float, default=1e-4, help="bisection tolerance, radians")
    _add_common(p, output_required=False)
    p.set_defaults(func=_cmd_critical)

    p = sub.add_parser("dims", help="alphabet-dimension scaling table")
    p.add_argument("--d-max", type=int, default=64)
    _add_common(p)
    p.set_defaults(func=_cmd_dims)

    p = sub.add_parser("simulate", help="Monte Carlo protocol run")
    p.add_argument("--rounds", type=int, default=100_000)
    p.add_argument("--theta", type=_parse_angle, default=0.0, help="attack angle (rad, or e.g. 22.5deg)")
    p.add_argument(
        "--phi",
        type=_parse_angle,
        default=None,
        help="attack angle; defaults to pi/4 - theta (the optimal line)",
    )
    p.add_argument("--cells-u", type=int, default=16)
    p.add_argument("--cells-phi", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--disclose-fraction", type=float, default=0.1)
    p.add_argument("--mi-cells-u", type=int, default=MI_CELLS_U)
    p.add_argument("--mi-cells-phi", type=int, default=MI_CELLS_PHI)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError,) as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (BracketError, NumericalCorruptionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return IO_ERROR


def main() -> None:
    sys.exit(run())
