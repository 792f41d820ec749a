"""Command-line front end.

    entconvert prepare    --config cfg.json --out state.json
    entconvert scan-dl    --config cfg.json --seed 1 --min -400 --max 400 --steps 41 --out dl.csv
    entconvert scan-angle --config cfg.json --seed 1 --theta-b-fixed-deg 45 --out angle.csv
    entconvert chsh       --config cfg.json --seed 1 --out chsh.json
    entconvert fit        angle.csv --kind angle --out fit.json

Angles on the command line are degrees. Exit codes: 0 ok, 2 bad
arguments/config, 3 I/O error, 4 fit did not converge.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    ANGLE_SCAN,
    DL_SCAN,
    PAPER_A,
    PAPER_B,
    FitConvergenceError,
    FringeScan,
    chsh_s,
    chsh_table_from_csv,
    chsh_table_to_csv,
    fit_fringe,
)
from .apparatus import ApparatusConfig, build_source, load_config, simulate_dl_scan
from .detection import chsh_settings_deg, scan_angle, simulate_chsh

FORMAT_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FIT = 0, 2, 3, 4


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    config: ApparatusConfig
    command: str
    seed: Optional[int]
    output_path: Optional[Path]


def _header(m: RunManifest) -> dict:
    return {"format_version": FORMAT_VERSION, "command": m.command, "seed": m.seed}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _require_seed(m: RunManifest) -> int:
    if m.seed is None:
        raise UsageError(f"{m.command} is stochastic and needs --seed")
    if m.seed < 0:
        raise UsageError("--seed must be non-negative")
    return m.seed


def _grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise UsageError("--steps must be at least 2")
    if not hi > lo:
        raise UsageError("--max must exceed --min")
    return np.linspace(lo, hi, steps)


def _positive_duration(d: float) -> float:
    if not d > 0:
        raise UsageError("--duration must be positive")
    return d


def cmd_prepare(m: RunManifest, args) -> dict[Optional[Path], str]:
    src = build_source(m.config)
    doc = _header(m)
    doc.update({"config": m.config.to_dict(), "state": src.state.to_dict(), "cross_factor": src.cross_factor})
    return {m.output_path: _dumps(doc)}


def cmd_scan_dl(m: RunManifest, args) -> dict[Optional[Path], str]:
    seed = _require_seed(m)
    grid = _grid(args.min, args.max, args.steps)
    scan = simulate_dl_scan(
        m.config, grid, math.radians(args.theta_a_deg), math.radians(args.theta_b_deg),
        _positive_duration(args.duration), seed,
    )
    return {m.output_path: scan.to_csv()}


def cmd_scan_angle(m: RunManifest, args) -> dict[Optional[Path], str]:
    seed = _require_seed(m)
    grid = _grid(args.min, args.max, args.steps)
    scan = scan_angle(
        build_source(m.config), math.radians(args.theta_b_fixed_deg), np.deg2rad(grid),
        m.config.pair_rate, _positive_duration(args.duration), seed,
    )
    return {m.output_path: scan.to_csv()}


def cmd_chsh(m: RunManifest, args) -> dict[Optional[Path], str]:
    a = (args.a_deg, args.a_prime_deg)
    b = (args.b_deg, args.b_prime_deg)
    outputs: dict[Optional[Path], str] = {}
    if args.from_counts:
        table = chsh_table_from_csv(Path(args.from_counts).read_text())
    else:
        seed = _require_seed(m)
        duration = _positive_duration(args.duration)
        settings = chsh_settings_deg(a, b)
        records = simulate_chsh(build_source(m.config), m.config.pair_rate, duration, seed, settings)
        rows = [(ta, tb, r.coincidences, duration) for (ta, tb), r in zip(settings, records)]
        table = {(ta, tb): c for ta, tb, c, _ in rows}
        counts_path = args.counts_out
        if counts_path is None and m.output_path is not None:
            counts_path = m.output_path.with_name(m.output_path.stem + "_counts.csv")
        if counts_path is not None:
            outputs[Path(counts_path)] = chsh_table_to_csv(rows)
    result = chsh_s(table, a[0], a[1], b[0], b[1])
    doc = _header(m)
    doc.update(result.to_dict())
    outputs = {m.output_path: _dumps(doc), **outputs}
    return outputs


def cmd_fit(m: RunManifest, args) -> dict[Optional[Path], str]:
    kind = {"angle": ANGLE_SCAN, "dl": DL_SCAN}[args.kind]
    scan = FringeScan.from_csv(Path(args.input).read_text())
    partner = FringeScan.from_csv(Path(args.partner).read_text()) if args.partner else None
    for s in (scan, partner):
        if s is not None and s.kind != kind:
            raise UsageError(f"--kind {args.kind} does not match the {s.kind} in the input CSV")
    fit = fit_fringe(scan, partner)
    doc = _header(m)
    doc.update(fit.to_dict())
    return {m.output_path: _dumps(doc)}


COMMANDS = {
    "prepare": cmd_prepare,
    "scan-dl": cmd_scan_dl,
    "scan-angle": cmd_scan_angle,
    "chsh": cmd_chsh,
    "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="apparatus config JSON (defaults used when omitted)")
    common.add_argument("--seed", type=int, help="base RNG seed (required for simulated counts)")
    common.add_argument("--out", help="output file (stdout when omitted)")

    parser = argparse.ArgumentParser(prog="entconvert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("prepare", parents=[common], help="dump the interferometer output state")

    p = sub.add_parser("scan-dl", parents=[common], help="simulate a path-difference scan")
    p.add_argument("--min", type=float, default=-400.0, help="um")
    p.add_argument("--max", type=float, default=400.0, help="um")
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--theta-a-deg", type=float, default=45.0)
    p.add_argument("--theta-b-deg", type=float, default=45.0)
    p.add_argument("--duration", type=float, default=10.0, help="s per point")

    p = sub.add_parser("scan-angle", parents=[common], help="simulate an analyzer-angle scan")
    p.add_argument("--min", type=float, default=0.0, help="deg")
    p.add_argument("--max", type=float, default=180.0, help="deg")
    p.add_argument("--steps", type=int, default=37)
    p.add_argument("--theta-b-fixed-deg", type=float, default=45.0)
    p.add_argument("--duration", type=float, default=10.0, help="s per point")

    p = sub.add_parser("chsh", parents=[common], help="simulate and evaluate a CHSH run")
    p.add_argument("--duration", type=float, default=10.0, help="s per setting")
    p.add_argument("--a-deg", type=float, default=PAPER_A[0])
    p.add_argument("--a-prime-deg", type=float, default=PAPER_A[1])
    p.add_argument("--b-deg", type=float, default=PAPER_B[0])
    p.add_argument("--b-prime-deg", type=float, default=PAPER_B[1])
    p.add_argument("--counts-out", help="raw 16-row count CSV (default: <out>_counts.csv)")
    p.add_argument("--from-counts", help="evaluate an existing count CSV instead of simulating")

    p = sub.add_parser("fit", parents=[common], help="fit a scan CSV")
    p.add_argument("input", help="scan CSV")
    p.add_argument("--kind", choices=("angle", "dl"), required=True)
    p.add_argument("--partner", help="opposite-sign delay scan for pair visibility")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out = Path(args.out) if args.out else None
        manifest = RunManifest(config, args.command, args.seed, out)
        outputs = COMMANDS[args.command](manifest, args)
    except FitConvergenceError as exc:
        print(f"entconvert: {exc}", file=sys.stderr)
        return EXIT_FIT
    except OSError as exc:
        print(f"entconvert: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"entconvert: {exc}", file=sys.stderr)
        return EXIT_USAGE

    paths = [p for p in outputs if p is not None]
    if len(set(paths)) != len(paths):
        print("entconvert: output paths collide", file=sys.stderr)
        return EXIT_USAGE
    try:
        for path, text in outputs.items():
            if path is None:
                sys.stdout.write(text)
            else:
                path.write_text(text)
    except OSError as exc:
        print(f"entconvert: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))
