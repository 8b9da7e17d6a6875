"""Command-line entry point: ``rotfric compute | sweep | selfcheck``.

Exit codes: 0 success, 1 configuration or range error, 2 quadrature did not
converge for some observable (rows are still written), 3 selfcheck failure.
"""
from __future__ import annotations

import argparse
import contextlib
import sys
from typing import Optional, Sequence

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .constants import DYN_CM_TO_N_M, DYN_TO_N, ERG_S_TO_W, M_TO_CM
from .engine import (SWEEP_PARAMETERS, ObservableSet, ScenarioError, compute, sweep,
                     validate_pointlike)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_SELFCHECK = 0, 1, 2, 3

COMPUTE_HEADER = "observable,value,error,unit,converged"
SWEEP_HEADER = "param,F_x,F_x_err,F_z,F_z_err,Q_dot,Q_dot_err,M,M_err,converged"

# (factor from CGS, unit label) per observable and unit system
UNITS = {
    "SI": {"F_x": (DYN_TO_N, "N"), "F_z": (DYN_TO_N, "N"), "Q_dot": (ERG_S_TO_W, "W"),
           "M": (DYN_CM_TO_N_M, "N*m")},
    "CGS": {"F_x": (1.0, "dyn"), "F_z": (1.0, "dyn"), "Q_dot": (1.0, "erg/s"),
            "M": (1.0, "dyn*cm")},
}
# sweep column unit: SI input value -> output value
_PARAM_TO_CGS = {"z0": M_TO_CM, "V": M_TO_CM, "Omega": 1.0, "T1": 1.0, "T2": 1.0}


def _fmt(x: float, precision: int) -> str:
    # repr-style formatting is locale independent
    return format(float(x), f".{precision}g")


def _converged(flag: bool) -> str:
    return "true" if flag else "false"


def format_compute(obs: ObservableSet, units: str = "SI", precision: int = 10) -> str:
    lines = [COMPUTE_HEADER]
    for name, res in obs.items().items():
        factor, label = UNITS[units][name]
        lines.append(",".join([name, _fmt(res.value * factor, precision),
                               _fmt(res.error_estimate * factor, precision), label,
                               _converged(res.converged)]))
    return "\n".join(lines) + "\n"


def format_sweep(rows, param: str, units: str = "SI", precision: int = 10) -> str:
    """``rows`` hold CGS parameter values; SI output converts them back."""
    scale = 1.0 if units == "CGS" else 1.0 / _PARAM_TO_CGS[param]
    lines = [SWEEP_HEADER]
    for row in rows:
        cells = [_fmt(row.value * scale, precision)]
        for name, res in row.observables.items().items():
            factor = UNITS[units][name][0]
            cells += [_fmt(res.value * factor, precision),
                      _fmt(res.error_estimate * factor, precision)]
        cells.append(_converged(row.converged))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _emit(text: str, cfg: RunConfig, out_path: Optional[str]):
    path = out_path or cfg.output.path
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _warn(scenario):
    for w in validate_pointlike(scenario):
        print(f"warning: {w}", file=sys.stderr)


def _load(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_compute(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    scenario = cfg.build_scenario()
    _warn(scenario)
    obs = compute(scenario, cfg.quadrature)
    _emit(format_compute(obs, cfg.output.units, cfg.output.precision), cfg, args.output)
    return EXIT_OK if obs.converged else EXIT_NONCONVERGED


def sweep_values(start: float, stop: float, points: int, log: bool) -> np.ndarray:
    """Ascending grid of ``points`` values between ``start`` and ``stop``."""
    if points < 2:
        raise ValueError("--points must be >= 2")
    if not (np.isfinite(start) and np.isfinite(stop)) or start == stop:
        raise ValueError("--from and --to must be finite and distinct")
    lo, hi = sorted((start, stop))
    if log:
        if lo <= 0:
            raise ValueError("log spacing requires --from and --to > 0")
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    if cfg is None:
        return EXIT_CONFIG
    try:
        values = sweep_values(args.start, args.stop, args.points, args.log)
        template = cfg.build_scenario()
        cgs_values = values * _PARAM_TO_CGS[args.param]
        rows = sweep(template, args.param, cgs_values, cfg.quadrature)
    except (ValueError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for end in (cgs_values[0], cgs_values[-1]):
        _warn(template.replace(**{args.param: float(end)}))
    _emit(format_sweep(rows, args.param, cfg.output.units, cfg.output.precision), cfg,
          args.output)
    return EXIT_OK if all(r.converged for r in rows) else EXIT_NONCONVERGED


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_selfcheck
    results = run_selfcheck(sys.stdout)
    failed = [r.name for r in results if not r.passed]
    print(f"selfcheck: {len(results) - len(failed)}/{len(results)} passed")
    return EXIT_OK if not failed else EXIT_SELFCHECK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotfric",
        description="Fluctuation-induced forces, heating rate and torque on a moving, "
                    "rotating nanoparticle near a surface.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="evaluate F_x, F_z, Q_dot and M for one config",
                       description="Evaluate all observables for a JSON config and write "
                                   "CSV (observable,value,error,unit,converged).")
    p.add_argument("config", help="path to the JSON configuration")
    p.add_argument("-o", "--output", help="CSV path (overrides output.path)")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sweep", help="tabulate observables over one parameter",
                       description="Sweep one kinematic or thermal parameter (SI units) "
                                   "and write one CSV row per value, ascending.")
    p.add_argument("config", help="path to the JSON configuration")
    p.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, required=True)
    spacing = p.add_mutually_exclusive_group()
    spacing.add_argument("--log", dest="log", action="store_true", help="geometric spacing")
    spacing.add_argument("--linear", dest="log", action="store_false",
                         help="linear spacing (default)")
    p.add_argument("-o", "--output", help="CSV path (overrides output.path)")
    p.set_defaults(func=cmd_sweep, log=False)

    p = sub.add_parser("selfcheck", help="run the built-in invariant battery",
                       description="Run fast invariant checks; exit 0 if all pass, 3 otherwise.")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as bad input
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    with contextlib.suppress(BrokenPipeError):
        return args.func(args)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
