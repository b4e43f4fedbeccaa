"""Command-line front end.

Usage::

    roa-select analyze network.json [--out report.json]
    roa-select ellipse network.json --node 1 [--points 360] [--out pts.csv]
    roa-select verify network.json [--node 1] [--samples 32] [--boundary-scale 0.99]
    roa-select simulate network.json --node 1 --x0 0.1,0.2 [--out traj.csv]

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 spectrum
touching the imaginary axis, 4 ellipse requested for a dimension other than 2.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from .errors import CenterSpectrumError, NoValidCandidatesError, RoaSelectError
from .network import load_document
from .roa import MODE_GLOBAL, MODE_SUBSYSTEM, DriverReport, EllipsoidRoa, boundary_points, rank_drivers
from .sim import ControlLaw, simulate, verify_roa, write_trajectory_csv

__all__ = ["main", "report_to_json"]

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_CENTER = 3
EXIT_DIMENSION = 4

SCHEMA_VERSION = 1


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _measure_kind(dim: int) -> str:
    return {0: "none", 1: "length", 2: "area"}.get(dim, "volume")


def report_to_json(report: DriverReport) -> dict:
    """Machine-readable report (full precision; non-finite values as null)."""
    candidates = []
    for rec in report.records:
        entry = {
            "node": rec.node,
            "controllable": rec.controllable,
            "subsystem_controllable": rec.subsystem_controllable,
            "valid": rec.valid,
            "excluded_reason": rec.excluded_reason,
            "unbounded": rec.unbounded,
            "delta": _num(rec.radius),
            "sqrt_det": _num(rec.sqrt_det),
            "measure": _num(rec.measure),
            "ratio": _num(rec.ratio),
            "rank": rec.rank,
        }
        if rec.valid:
            entry["input_quadratic"] = rec.roa.input_quadratic
            entry["P"] = rec.roa.shape.tolist()
            entry["gain"] = rec.riccati.gain[0].tolist()
            entry["riccati_residual"] = rec.riccati.residual_norm
        candidates.append(entry)
    doc = {
        "schema": SCHEMA_VERSION,
        "mode": report.mode,
        "n": _node_count(report),
        "k": report.k,
        "measure_kind": _measure_kind(report.k),
        "best_node": report.best_candidate,
        "eigenvalues": [{"re": ev.real, "im": ev.imag} for ev in report.eigenvalues],
        "candidates": candidates,
    }
    if report.split is not None and report.mode == MODE_SUBSYSTEM:
        doc["transform"] = report.split.transform.tolist()
    return doc


def _node_count(report: DriverReport) -> int:
    if report.split is not None:
        return report.split.n
    return report.system_matrix.shape[0]


def _fmt_eigs(eigs) -> str:
    parts = []
    for ev in eigs:
        if ev.imag == 0:
            parts.append(f"{ev.real:.4f}")
        else:
            parts.append(f"{ev.real:.4f}{ev.imag:+.4f}j")
    return ", ".join(parts)


def _print_table(report: DriverReport, out) -> None:
    n = _node_count(report)
    if report.mode == MODE_GLOBAL:
        print(f"mode: {report.mode} (n = {n}, no anti-stable eigenvalues)", file=out)
        print(f"eigenvalues: {_fmt_eigs(report.eigenvalues)}", file=out)
        print("globally stabilizable; ROA unbounded", file=out)
        return
    if report.mode == MODE_SUBSYSTEM:
        k = report.k
        anti = report.eigenvalues[:k]
        stable = report.eigenvalues[k:]
        print(f"mode: {report.mode} (k = {k} of n = {n})", file=out)
        print(f"eigenvalues: {_fmt_eigs(anti)} | {_fmt_eigs(stable)}", file=out)
    else:
        print(f"mode: {report.mode} (n = {n})", file=out)
        print(f"eigenvalues: {_fmt_eigs(report.eigenvalues)}", file=out)
    kind = _measure_kind(report.k)
    print(f"{'rank':>4}  {'node':>4}  {'delta':>10}  {'sqrt_det_P':>10}  {kind:>10}  {'ratio':>8}", file=out)
    for rec in report.ranked():
        print(
            f"{rec.rank:>4}  {rec.node:>4}  {rec.radius:>10.4f}  {rec.sqrt_det:>10.4f}"
            f"  {rec.measure:>10.4f}  {rec.ratio:>8.4f}",
            file=out,
        )
    for rec in report.records:
        if not rec.valid:
            print(f"excluded: node {rec.node}: {rec.excluded_reason}", file=out)
    print(f"best driver node: {report.best_candidate}", file=out)


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _load_and_rank(args):
    try:
        net, cfg = load_document(args.file)
    except OSError as exc:
        raise CliError(f"cannot read {args.file}: {exc}", EXIT_INVALID) from None
    except (RoaSelectError, ValueError) as exc:
        raise CliError(f"invalid network document: {exc}", EXIT_INVALID) from None
    try:
        report = rank_drivers(net, cfg, force_subsystem=args.force_subsystem)
    except CenterSpectrumError as exc:
        raise CliError(f"cannot analyze: {exc}", EXIT_CENTER) from None
    except NoValidCandidatesError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    return net, cfg, report


def _valid_record(report: DriverReport, node: int):
    try:
        rec = report.record(node)
    except RoaSelectError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    if not rec.valid:
        raise CliError(f"node {node} was excluded: {rec.excluded_reason}", EXIT_INVALID)
    return rec


def cmd_analyze(args) -> int:
    _, _, report = _load_and_rank(args)
    _print_table(report, sys.stdout)
    if args.out:
        with _output(args.out) as fh:
            json.dump(report_to_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_ellipse(args) -> int:
    _, _, report = _load_and_rank(args)
    dim = report.k
    if report.mode == MODE_GLOBAL or dim != 2:
        raise CliError(
            f"ellipse output needs a 2-dimensional analysis, this one has dimension {dim}",
            EXIT_DIMENSION,
        )
    if args.points < 3:
        raise CliError("--points must be at least 3", EXIT_INVALID)
    rec = _valid_record(report, args.node)
    pts = boundary_points(rec.roa, args.points)
    with _output(args.out) as fh:
        if report.mode == MODE_SUBSYSTEM:
            fh.write("# subsystem coordinates: (z1, z2) are the anti-stable entries of z = V^-1 x\n")
            header = "z1,z2"
        else:
            header = "x1,x2"
        np.savetxt(fh, pts, delimiter=",", header=header, comments="", fmt="%.17g")
    return EXIT_OK


def cmd_verify(args) -> int:
    _, cfg, report = _load_and_rank(args)
    if report.mode == MODE_GLOBAL:
        print("globally stabilizable; ROA unbounded, nothing to verify")
        return EXIT_OK
    if args.node is not None:
        records = [_valid_record(report, args.node)]
    else:
        records = report.records
    all_ok = True
    for rec in records:
        if not rec.valid:
            print(f"node {rec.node}: skipped ({rec.excluded_reason})")
            continue
        roa = rec.roa
        if args.scale_delta != 1.0:
            roa = EllipsoidRoa(roa.shape, roa.radius * args.scale_delta, roa.input_quadratic)
        law = ControlLaw(rec.riccati.gain, cfg.saturation_limit)
        try:
            res = verify_roa(
                report.system_matrix,
                rec.input_column,
                law,
                roa,
                samples=args.samples,
                boundary_scale=args.boundary_scale,
                horizon=args.horizon,
                step=args.step,
            )
        except RoaSelectError as exc:
            raise CliError(str(exc), EXIT_INVALID) from None
        all_ok &= res.passed
        status = "pass" if res.passed else "FAIL"
        print(
            f"node {rec.node}: {status}  converged {res.samples_converged}/{res.samples_total}"
            f"  failed {res.samples_failed}  worst dV/delta {res.worst_lyapunov_increase / roa.radius:.4f}"
            f"  scale {res.boundary_scale:.4f}"
        )
    return EXIT_OK if all_ok else EXIT_VERIFY_FAILED


def cmd_simulate(args) -> int:
    net, cfg, report = _load_and_rank(args)
    try:
        x0 = np.array([float(v) for v in args.x0.split(",")])
    except ValueError:
        raise CliError(f"--x0 must be comma-separated numbers, got {args.x0!r}", EXIT_INVALID) from None
    if x0.size != net.node_count:
        raise CliError(f"--x0 has {x0.size} entries, network has {net.node_count} nodes", EXIT_INVALID)
    if report.mode == MODE_GLOBAL:
        raise CliError("network is open-loop stable; no feedback law was designed", EXIT_INVALID)
    _valid_record(report, args.node)
    law = ControlLaw(report.full_state_gain(args.node), cfg.saturation_limit)
    b = net.input_weights[net.position_of(args.node)] * np.eye(net.node_count)[:, args.node - 1]
    try:
        traj = simulate(
            net.adjacency,
            b,
            law,
            x0,
            horizon=args.horizon,
            step=args.step,
            shape=report.full_state_shape(args.node),
        )
    except RoaSelectError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    flag = f"converged: {'true' if traj.converged else 'false'}"
    if args.out:
        with _output(args.out) as fh:
            write_trajectory_csv(traj, fh)
        print(flag)
    else:
        write_trajectory_csv(traj, sys.stdout)
        print(flag, file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="network document (JSON)")
    common.add_argument(
        "--force-subsystem",
        action="store_true",
        help="use the subsystem procedure even for fully anti-stable networks",
    )

    parser = argparse.ArgumentParser(
        prog="roa-select",
        description="Select the driver node with the largest guaranteed region of attraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="rank candidate driver nodes")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ellipse", parents=[common], help="boundary points of a 2-D invariant ellipse")
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--points", type=int, default=360)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ellipse)

    p = sub.add_parser("verify", parents=[common], help="check the ellipsoids by simulation")
    p.add_argument("--node", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--boundary-scale", type=float, default=0.99)
    p.add_argument("--scale-delta", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=50.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", parents=[common], help="simulate one closed-loop trajectory")
    p.add_argument("--node", type=int, required=True)
    p.add_argument("--x0", required=True, help="initial state, comma separated")
    p.add_argument("--horizon", type=float, default=50.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
