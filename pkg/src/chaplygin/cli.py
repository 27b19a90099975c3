"""Command-line interface.

    chaplygin simulate      [-c CONFIG] [-s KEY=VALUE ...]
    chaplygin verify [which] [-c CONFIG] [-s KEY=VALUE ...]
    chaplygin bracket-table [-c CONFIG] [-s KEY=VALUE ...]

Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
3 integration failure (step index on stderr). Numeric output uses 17
significant digits so files round-trip losslessly through the bundled
reader, and identical config plus seed gives byte-identical files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .brackets import VARIANTS, bracket_table, coordinate_name
from .config import (
    ConfigError,
    MODELS,
    RunConfig,
    VERIFY_CHOICES,
    build_config,
)
from .dynamics import (
    FullState,
    IntegrationError,
    Trajectory,
    integrate_full,
    integrate_multiplier,
    integrate_reduced,
    integrate_rescaled,
    multiplier_state_from_reduced,
)
from .model import ReducedState
from .so3 import exp_rotation
from . import verify as verify_mod

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fmt(value: float) -> str:
    # value + 0.0 turns negative zero into plain zero
    return f"{value + 0.0:.17g}"


# Trajectory files -------------------------------------------------------------

def _trajectory_table(traj: Trajectory):
    base_cols = ["K1", "K2", "K3", "g1", "g2", "g3"]
    int_cols = ["H", "J", "Kgamma", "gnorm"]
    reduced = traj.reduced_z()
    if traj.kind == "reduced":
        cols = ["t"] + base_cols + int_cols
        rows = np.column_stack([traj.times, reduced, traj.integrals])
    elif traj.kind == "rescaled":
        cols = ["t", "tau"] + base_cols + int_cols
        rows = np.column_stack([traj.times, traj.taus, reduced, traj.integrals])
    elif traj.kind in ("full", "multiplier"):
        rot_cols = [f"R{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)]
        cols = ["t"] + base_cols + int_cols + rot_cols + ["x", "y"]
        blocks = [traj.times[:, None], reduced, traj.integrals,
                  traj.states[:, :9], traj.states[:, 9:11]]
        if traj.kind == "multiplier":
            cols += ["resx", "resy"]
            blocks.append(traj.residuals)
        rows = np.column_stack(blocks)
    else:
        raise ValueError(f"unknown trajectory kind {traj.kind!r}")
    return cols, rows


def write_trajectory(traj: Trajectory, path: str):
    """Comma-delimited text, one header line, 17 significant digits."""
    cols, rows = _trajectory_table(traj)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_trajectory(path: str):
    """Bundled reader: returns (column names, float array)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        data = [[float(cell) for cell in line.strip().split(",")]
                for line in fh if line.strip()]
    return cols, np.array(data)


# Commands ---------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    p = cfg.params
    if cfg.model == "reduced":
        s0 = ReducedState(cfg.K0, cfg.gamma0)
        traj = integrate_reduced(p, s0, cfg.dt, cfg.steps, stride=cfg.stride,
                                 renorm_interval=cfg.renorm_interval)
    elif cfg.model == "rescaled":
        s0 = ReducedState(cfg.K0, cfg.gamma0)
        traj = integrate_rescaled(p, s0, cfg.dt, cfg.steps, stride=cfg.stride,
                                  renorm_interval=cfg.renorm_interval)
    elif cfg.model == "full":
        s0 = FullState(exp_rotation(cfg.rot), cfg.x0, cfg.y0, cfg.K0)
        traj = integrate_full(p, s0, cfg.dt, cfg.steps, stride=cfg.stride,
                              repair_interval=cfg.renorm_interval)
    else:
        s0 = multiplier_state_from_reduced(p, exp_rotation(cfg.rot), cfg.K0,
                                           cfg.x0, cfg.y0)
        traj = integrate_multiplier(p, s0, cfg.dt, cfg.steps, stride=cfg.stride,
                                    repair_interval=cfg.renorm_interval)
    write_trajectory(traj, cfg.out)
    print(f"wrote {cfg.out}: model={cfg.model} samples={len(traj)} dt={_fmt(cfg.dt)}")
    return EXIT_OK


def _selected_variants(cfg: RunConfig):
    return VARIANTS if cfg.variant == "all" else (cfg.variant,)


def _verify_entries(cfg: RunConfig, which: str):
    p = cfg.params
    spec = verify_mod.SampleSpec(count=cfg.sample_count, seed=cfg.seed,
                                 k_low=cfg.k_low, k_high=cfg.k_high)
    tols = cfg.tolerances
    if which == "all":
        report = verify_mod.run_all(
            p, spec, tols,
            commute_times=(cfg.commute_s, cfg.commute_t),
            commute_dt=cfg.commute_dt,
            consistency_horizon=cfg.consistency_horizon,
            consistency_dt=cfg.consistency_dt,
            nonintegrability_count=cfg.nonintegrability_count,
        )
        return report.entries
    if which == "jacobi":
        return [verify_mod.jacobi_suite(p, v, spec, tols) for v in _selected_variants(cfg)]
    if which == "casimir":
        entries = []
        for v in _selected_variants(cfg):
            entries.extend(verify_mod.casimir_suite(p, v, spec, tols))
        return entries
    if which == "nonintegrability":
        from dataclasses import replace
        return verify_mod.nonintegrability_suite(
            p, replace(spec, count=cfg.nonintegrability_count), tols)
    if which == "alpha":
        return [verify_mod.alpha_annihilation(p, spec, tols)]
    if which == "commute":
        s0 = ReducedState(cfg.K0, cfg.gamma0)
        return verify_mod.involution_and_commutation(
            p, s0, cfg.commute_s, cfg.commute_t, cfg.commute_dt, tols)
    if which == "measure":
        return verify_mod.measure_suite(p, spec, tols)
    if which == "consistency":
        initial = multiplier_state_from_reduced(p, exp_rotation(cfg.rot), cfg.K0,
                                                cfg.x0, cfg.y0)
        return [
            verify_mod.reduction_consistency(p, initial, cfg.consistency_horizon,
                                             cfg.consistency_dt, tols),
            verify_mod.reduction_order(p, initial, tolerances=tols),
        ]
    raise ConfigError(f"unknown verify selection {which!r}")


def cmd_verify(cfg: RunConfig, which: str) -> int:
    entries = _verify_entries(cfg, which)
    report = verify_mod.VerificationReport(
        params=cfg.params,
        spec=verify_mod.SampleSpec(count=cfg.sample_count, seed=cfg.seed,
                                   k_low=cfg.k_low, k_high=cfg.k_high),
        entries=list(entries),
    )
    lines = report.to_lines()
    with open(cfg.report_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    for line in lines:
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def cmd_bracket_table(cfg: RunConfig) -> int:
    s = ReducedState(cfg.K0, cfg.gamma0)
    names = [coordinate_name(i) for i in range(6)]
    for variant in VARIANTS:
        lam = bracket_table(cfg.params, variant).coeffs(s)
        print(f"variant={variant} K=({_fmt(s.K[0])},{_fmt(s.K[1])},{_fmt(s.K[2])}) "
              f"gamma=({_fmt(s.gamma[0])},{_fmt(s.gamma[1])},{_fmt(s.gamma[2])})")
        header = " ".join(f"{n:>14s}" for n in names)
        print(f"{'':4s}{header}")
        for i, name in enumerate(names):
            cells = " ".join(f"{lam[i, j] + 0.0:14.6g}" for j in range(6))
            print(f"{name:4s}{cells}")
        print()
    return EXIT_OK


# Entry point ------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaplygin",
        description="Rolling-sphere simulations and bracket verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", default=None,
                        help="flat key = value config file")
        sp.add_argument("-s", "--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable, later wins)")

    sp = sub.add_parser("simulate", help=f"integrate one trajectory ({'|'.join(MODELS)})")
    common(sp)
    sp = sub.add_parser("verify", help="run verification suites and write a report")
    sp.add_argument("which", nargs="?", default="all", choices=VERIFY_CHOICES,
                    help="which suite to run (default: all)")
    common(sp)
    sp = sub.add_parser("bracket-table", help="print the three coefficient tables at the configured state")
    common(sp)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = build_config(args.config, args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.which)
        return cmd_bracket_table(cfg)
    except IntegrationError as exc:
        print(f"integration failure at step {exc.step}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
