"""Command-line entry point.

The command itself lives in the config file (``command`` key); flags
override the numeric parameters. Outputs are written atomically into the
--out directory and are byte-identical across runs with the same config and
seed.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 failed acceptance check.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics, io_utils
from .config import load_config
from .equilibria import solve_equilibrium
from .errors import ConfigError, LpReduceError
from .full_oracle import FullState, compare, reduced_initial_from_full
from .reduced_dynamics import ReducedState, integrate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lpreduce",
        description="Symmetry reduction of mechanical systems in gauge-fixed coordinates")
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default="lpreduce-out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--dt", type=float, default=None, help="override time step")
    parser.add_argument("--t-end", type=float, default=None, help="override end time")
    parser.add_argument("--tol-gauge", type=float, default=None)
    parser.add_argument("--tol-compare-state", type=float, default=None)
    parser.add_argument("--tol-compare-reconstruction", type=float, default=None)
    parser.add_argument("--tol-energy", type=float, default=None)
    parser.add_argument("--tol-vertical", type=float, default=None)
    parser.add_argument("--tol-equilibrium", type=float, default=None)
    return parser


def _initial_reduced(config):
    initial = config.raw.get("initial", {})
    system = config.system
    if "reduced" in initial:
        red = initial["reduced"]
        return ReducedState(*(np.asarray(red[k], dtype=float) for k in
                              ("q_star", "f_tilde", "omega_p", "omega_v", "p", "a")))
    if "full" in initial:
        full = _initial_full(config)
        return reduced_initial_from_full(system, full,
                                         gauge_tol=config.tolerances["gauge"])
    raise ConfigError("command requires an initial state", field="initial")


def _initial_full(config):
    initial = config.raw.get("initial", {})
    if "full" not in initial:
        raise ConfigError("command requires full-space initial data", field="initial.full")
    full = initial["full"]
    return FullState(*(np.asarray(full[k], dtype=float) for k in ("q", "f", "qdot", "fdot")))


def run(config, out_dir):
    """Dispatch one parsed config; returns the process exit code."""
    os.makedirs(out_dir, exist_ok=True)
    system = config.system
    tol = config.tolerances
    if config.command == "check":
        report = diagnostics.check_report(system, samples=config.validation_samples,
                                          seed=config.seed)
        io_utils.write_json(os.path.join(out_dir, "check.json"), report)
        return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE

    if config.command == "simulate":
        state = _initial_reduced(config)
        trajectory = integrate(system, state, config.t_end, config.dt,
                               gauge_tol=tol["gauge"])
        header = io_utils.trajectory_csv_header(system.n_p, system.n_v, system.n_g)
        io_utils.write_csv(os.path.join(out_dir, "trajectory.csv"), header,
                           io_utils.trajectory_rows(trajectory))
        meta = {
            "system": system.name, "dt": config.dt, "t_end": config.t_end,
            "seed": config.seed, "columns": header,
            "complete": trajectory.complete, "failure": trajectory.failure,
            "reprojections": trajectory.reprojections,
            "monitors": {
                "energy_drift": float(np.max(np.abs(trajectory.energy - trajectory.energy[0]))),
                "vertical_drift": float(np.max(np.abs(
                    trajectory.vertical_invariant - trajectory.vertical_invariant[0]))),
                "gauge_residual_max": float(np.max(trajectory.gauge_residual)),
                "tangency_residual_max": float(np.max(trajectory.tangency_residual)),
            },
        }
        io_utils.write_json(os.path.join(out_dir, "trajectory.json"), meta)
        return EXIT_OK if trajectory.complete else EXIT_NUMERICAL

    if config.command == "compare":
        report = compare(system, _initial_full(config), config.t_end, config.dt,
                         gauge_tol=tol["gauge"], tol_state=tol["compare_state"],
                         tol_reconstruction=tol["compare_reconstruction"],
                         tol_energy=tol["energy"], tol_vertical=tol["vertical"])
        io_utils.write_json(os.path.join(out_dir, "comparison.json"), report.as_dict())
        if not report.complete:
            return EXIT_NUMERICAL
        return EXIT_OK if report.passed else EXIT_ACCEPTANCE

    if config.command == "equilibria":
        spec = config.raw.get("equilibria")
        if spec is None:
            raise ConfigError("equilibria command requires an 'equilibria' block",
                              field="equilibria")
        eq = solve_equilibrium(system,
                               (np.asarray(spec["seed_q_star"], dtype=float),
                                np.asarray(spec["seed_f_tilde"], dtype=float)),
                               p_magnitude=float(spec["p_magnitude"]),
                               eigen_index=int(spec["eigen_index"]),
                               tol=tol["equilibrium"])
        payload = eq.as_dict()
        trajectory = integrate(system,
                               ReducedState(q_star=eq.q_star, f_tilde=eq.f_tilde,
                                            omega_p=np.zeros(system.n_p),
                                            omega_v=np.zeros(system.n_v),
                                            p=eq.p, a=np.zeros(system.n_g)),
                               float(spec["verify_t_end"]), config.dt,
                               gauge_tol=tol["gauge"])
        q0 = trajectory.states[0]
        drift = max(float(np.max(np.abs(s.q_star - q0.q_star))) for s in trajectory.states)
        drift = max(drift, max(float(np.max(np.abs(s.f_tilde - q0.f_tilde)))
                               for s in trajectory.states))
        payload["verification"] = {"t_end": float(spec["verify_t_end"]),
                                   "shape_drift": drift,
                                   "complete": trajectory.complete}
        io_utils.write_json(os.path.join(out_dir, "equilibria.json"), payload)
        return EXIT_OK

    if config.command == "derive-report":
        point = config.raw.get("derive_point")
        if point is None:
            raise ConfigError("derive-report requires a 'derive_point' block",
                              field="derive_point")
        report = diagnostics.derive_report(system, point["q"], point["f"],
                                           gauge_tol=tol["gauge"])
        io_utils.write_json(os.path.join(out_dir, "geometry.json"), report)
        return EXIT_OK

    raise ConfigError(f"unknown command {config.command!r}", field="command")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "seed": args.seed, "dt": args.dt, "t_end": args.t_end,
        "tol_gauge": args.tol_gauge,
        "tol_compare_state": args.tol_compare_state,
        "tol_compare_reconstruction": args.tol_compare_reconstruction,
        "tol_energy": args.tol_energy,
        "tol_vertical": args.tol_vertical,
        "tol_equilibrium": args.tol_equilibrium,
    }
    try:
        config = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(config, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LpReduceError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
