"""
Command-line driver: solve, simulate, compare delay tails and sweep.

Every command reads one configuration document, applies --set overrides,
runs and writes a CSV (default under config.RESULTS_DIR). Sweep points are
independent and can be spread over a process pool; rows keep the sweep order.

Exit codes:
    0  success
    2  invalid configuration or arguments
    3  infeasible delay-outage target or unstable queue
    4  numerical failure (quadrature, root bracketing, iteration limit)

Usage:
    python power_control_cli.py solve --config data/configs/delay_sweep.env
    python power_control_cli.py sweep-delay --config data/configs/delay_sweep.env --workers 4
"""

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules import config
from modules import delay_model
from modules import effcap
from modules import params
from modules import power_control
from modules import simulator
from modules.errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    MaxIterationsError,
    NoSolutionError,
    QuadratureError,
    UnstableError,
)


COMMANDS = ("solve", "simulate", "ccdf-compare", "sweep-delay", "sweep-rate")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

FLOAT_FORMAT = "%.12g"

# delay bounds of the energy-efficiency sweep, 2..100 ms in 1 ms steps
DEFAULT_DMAX_GRID = tuple(np.round(np.arange(2, 101) * 1e-3, 6).tolist())
DEFAULT_RATE_DMAX_GRID = (0.01, 0.1)
DEFAULT_P_GRID = tuple(np.round(np.arange(1, 11) * 0.1, 6).tolist())
# analytic and empirical tails are drawn out to this many delay bounds
DEFAULT_TMAX_FACTOR = 5.0

SWEEP_DELAY_COLUMNS = ["Dmax_s", "Ptx_proposed_w", "eta_proposed", "Ptx_method1_w", "eta_method1", "improvement_pct", "feasible"]
SWEEP_RATE_COLUMNS = ["Dmax_s", "p", "mu_bps", "Ptx_w", "eta_bits_per_j", "feasible"]


@dataclass(frozen=True)
class ExperimentSpec:
    """
    One command invocation.

    overrides are (key, value) pairs applied to the configuration document
    before validation; their keys must be configuration keys.
    """
    command: str
    config_path: Path
    out_path: Path
    seed: int = config.DEFAULT_SEED
    overrides: Tuple[Tuple[str, str], ...] = ()
    slots: int = config.DEFAULT_SLOTS
    tol: float = config.DEFAULT_TOL
    workers: int = config.DEFAULT_WORKERS
    ptx: Optional[float] = None
    tmax: Optional[float] = None
    dmax_grid: Tuple[float, ...] = ()
    p_grid: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError("command", f"unknown command {self.command!r}, expected one of {COMMANDS}")
        for key, _ in self.overrides:
            if key not in params.CONFIG_KEYS:
                raise ConfigError(key, "override references an unknown configuration key")
        if self.slots < 1:
            raise ConfigError("--slots", f"must be >= 1, got {self.slots}")
        if self.seed < 0:
            raise ConfigError("--seed", f"must be >= 0, got {self.seed}")
        if self.workers < 1:
            raise ConfigError("--workers", f"must be >= 1, got {self.workers}")
        if not self.tol > 0:
            raise ConfigError("--tol", f"must be > 0, got {self.tol}")
        if self.out_path.exists() and self.out_path.is_dir():
            raise ConfigError("--out", f"{self.out_path} is a directory")

    def load(self) -> Tuple[params.SystemParams, params.TrafficModel, params.QoSTarget]:
        return params.load_config(self.config_path, dict(self.overrides))


# ===== ARGUMENT PARSING =====

def parse_override(text: str) -> Tuple[str, str]:
    """Split a --set argument key=value."""
    key, separator, value = text.partition("=")
    key = key.strip()
    if not separator or not key:
        raise ConfigError("--set", f"expected key=value, got {text!r}")
    return key, value.strip()


def parse_grid(text: str) -> Tuple[float, ...]:
    """
    Parse a grid given as a comma list ("0.01,0.1") or as start:stop:step
    with stop included ("0.002:0.1:0.001").
    """
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(round((stop - start) / step)) + 1
            return tuple(np.round(start + step * np.arange(count), 12).tolist())
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ConfigError("grid", f"cannot parse {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="key=value configuration document")
    common.add_argument("--out", type=Path, default=None, help="output CSV (default: results directory)")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="simulation seed")
    common.add_argument("--slots", type=int, default=config.DEFAULT_SLOTS, help="simulated slots")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (repeatable)")
    common.add_argument("--eps", type=float, default=None, help="shorthand for --set eps=X")
    common.add_argument("--tol", type=float, default=config.DEFAULT_TOL, help="power bisection tolerance")
    common.add_argument("--ptx", type=float, default=None, help="simulate at this power instead of the solved one")
    common.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS, help="worker processes for sweeps")
    common.add_argument("--tmax", type=float, default=None, help="last delay of the CCDF grid in seconds")
    common.add_argument("--dmax-grid", type=str, default=None, help="delay bounds in seconds, a,b,c or start:stop:step")
    common.add_argument("--p-grid", type=str, default=None, help="arrival probabilities, a,b,c or start:stop:step")

    parser = argparse.ArgumentParser(
        prog="power_control_cli.py",
        description="Energy-efficient constant power control under a delay-outage target",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("solve", parents=[common], help="minimum power meeting the delay-outage target")
    subparsers.add_parser("simulate", parents=[common], help="Monte Carlo run at the solved (or given) power")
    subparsers.add_parser("ccdf-compare", parents=[common], help="empirical vs analytic delay tails")
    subparsers.add_parser("sweep-delay", parents=[common], help="energy efficiency against the delay bound")
    subparsers.add_parser("sweep-rate", parents=[common], help="energy efficiency against the arrival probability")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    overrides = [parse_override(text) for text in args.overrides]
    if args.eps is not None:
        overrides.append(("eps", repr(args.eps)))

    default_dmax = DEFAULT_RATE_DMAX_GRID if args.command == "sweep-rate" else DEFAULT_DMAX_GRID
    return ExperimentSpec(
        command=args.command,
        config_path=args.config,
        out_path=args.out if args.out is not None else config.RESULTS_DIR / f"{args.command}.csv",
        seed=args.seed,
        overrides=tuple(overrides),
        slots=args.slots,
        tol=args.tol,
        workers=args.workers,
        ptx=args.ptx,
        tmax=args.tmax,
        dmax_grid=parse_grid(args.dmax_grid) if args.dmax_grid else default_dmax,
        p_grid=parse_grid(args.p_grid) if args.p_grid else DEFAULT_P_GRID,
    )


# ===== HELPERS =====

def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logging.info(f"cli._write_csv: wrote {len(frame)} rows to {path}")


def _map_points(func: Callable, tasks: Sequence, workers: int) -> List:
    """Evaluate func over tasks in order, inline for one worker, else in a process pool."""
    if workers == 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, tasks))


def _delay_grid(spec: ExperimentSpec, system: params.SystemParams, qos: params.QoSTarget) -> Tuple[float, ...]:
    tmax = spec.tmax if spec.tmax is not None else DEFAULT_TMAX_FACTOR * qos.Dmax
    if not tmax > 0:
        raise ConfigError("--tmax", f"must be > 0, got {tmax}")
    count = int(np.floor(tmax / system.Ts + 1e-9)) + 1
    return tuple(np.round(np.arange(count) * system.Ts, 12).tolist())


def _operating_power(spec: ExperimentSpec, system, traffic, qos) -> float:
    if spec.ptx is not None:
        return spec.ptx
    return power_control.solve_min_power(traffic, qos, system, spec.tol).Ptx


def _sim_config(spec: ExperimentSpec, system, traffic, Ptx: float, grid) -> simulator.SimConfig:
    return simulator.SimConfig(
        params=system,
        traffic=traffic,
        Ptx=Ptx,
        n_slots=spec.slots,
        seed=spec.seed,
        ccdf_grid=grid,
        queue_grid=(traffic.Lbar, 2.0 * traffic.Lbar, 4.0 * traffic.Lbar),
    )


# ===== COMMANDS =====

def cmd_solve(spec: ExperimentSpec) -> power_control.PowerSolution:
    """Solve for the minimum power and write the one-row solution CSV."""
    system, traffic, qos = spec.load()
    solution = power_control.solve_min_power(traffic, qos, system, spec.tol)
    _write_csv(power_control.solution_to_frame(solution), spec.out_path)

    print(f"Ptx = {solution.Ptx:.6g} W, u* = {solution.u_star:.6g} 1/bit, eta = {solution.eta:.6g} bits/J "
          f"(P_l = {solution.P_l:.6g} W, residual {solution.residual:.2e}, {solution.iterations} iterations)")
    if solution.degenerate:
        print("eps = 1: no delay-outage constraint, Ptx is the stability threshold with a 0.1% margin")
    return solution


def cmd_simulate(spec: ExperimentSpec) -> simulator.SimStats:
    """Simulate at --ptx or the solved power; write stat,value rows and the empirical CCDF."""
    system, traffic, qos = spec.load()
    Ptx = _operating_power(spec, system, traffic, qos)
    stats = simulator.run_simulation(_sim_config(spec, system, traffic, Ptx, _delay_grid(spec, system, qos)))

    _write_csv(simulator.stats_to_frame(stats), spec.out_path)
    _write_csv(stats.delay_ccdf.to_frame(), spec.out_path.with_name(f"{spec.out_path.stem}_ccdf.csv"))
    print(f"{stats.packets} packets, p_w_hat = {stats.p_w_hat:.4f}, eta_hat = {stats.eta_hat:.6g} bits/J")
    return stats


def cmd_ccdf_compare(spec: ExperimentSpec) -> pd.DataFrame:
    """
    Empirical delay CCDF next to the three analytic approximations, in the
    long t_s,prob,method schema. The analytic curves use the link's own
    QoS exponent at the simulated power.
    """
    system, traffic, qos = spec.load()
    Ptx = _operating_power(spec, system, traffic, qos)
    grid = _delay_grid(spec, system, qos)

    u = effcap.solve_qos_exponent_for_power(Ptx, traffic, system)
    stats = simulator.run_simulation(_sim_config(spec, system, traffic, Ptx, grid))
    curves = [
        stats.delay_ccdf,
        delay_model.build_ccdf(delay_model.PW_PREFACTOR, u, traffic, grid),
        delay_model.build_ccdf(delay_model.METHOD1, u, traffic, grid),
        delay_model.build_ccdf(delay_model.METHOD2, u, traffic, grid, Ptx=Ptx, params=system),
    ]
    frame = pd.concat([curve.to_frame() for curve in curves], ignore_index=True)
    _write_csv(frame, spec.out_path)
    print(f"Ptx = {Ptx:.6g} W, u* = {u.u_star:.6g} 1/bit, {len(grid)} grid points, {stats.packets} simulated packets")
    return frame


def _solve_delay_point(task) -> Dict[str, object]:
    system, traffic, qos, tol = task
    row = {"Dmax_s": qos.Dmax}
    try:
        proposed = power_control.solve_min_power(traffic, qos, system, tol)
        baseline = power_control.solve_min_power_method1(traffic, qos, system, tol)
    except (InfeasibleError, UnstableError) as e:
        logging.warning(f"cli._solve_delay_point: Dmax={qos.Dmax} s infeasible: {e}")
        row.update({column: float("nan") for column in SWEEP_DELAY_COLUMNS[1:-1]}, feasible=False)
        return row

    row.update(
        Ptx_proposed_w=proposed.Ptx,
        eta_proposed=proposed.eta,
        Ptx_method1_w=baseline.Ptx,
        eta_method1=baseline.eta,
        improvement_pct=100.0 * (proposed.eta / baseline.eta - 1.0),
        feasible=True,
    )
    return row


def cmd_sweep_delay(spec: ExperimentSpec) -> pd.DataFrame:
    """Energy efficiency of the proposed and method-1 schemes over the Dmax grid."""
    system, traffic, qos = spec.load()
    tasks = [(system, traffic, params.QoSTarget(Dmax=Dmax, eps=qos.eps, Ts=system.Ts), spec.tol)
             for Dmax in spec.dmax_grid]
    logging.info(f"cli.cmd_sweep_delay: {len(tasks)} delay bounds, eps={qos.eps}, workers={spec.workers}")

    frame = pd.DataFrame(_map_points(_solve_delay_point, tasks, spec.workers), columns=SWEEP_DELAY_COLUMNS)
    _write_csv(frame, spec.out_path)

    feasible = frame[frame["feasible"]]
    if not feasible.empty:
        best = feasible.loc[feasible["improvement_pct"].idxmax()]
        print(f"max improvement {best['improvement_pct']:.2f}% at Dmax = {best['Dmax_s'] * 1e3:g} ms "
              f"({len(feasible)}/{len(frame)} feasible points)")
    return frame


def _solve_rate_point(task) -> Dict[str, object]:
    system, traffic, qos, tol = task
    row = {"Dmax_s": qos.Dmax, "p": traffic.p, "mu_bps": traffic.mu}
    try:
        solution = power_control.solve_min_power(traffic, qos, system, tol)
    except (InfeasibleError, UnstableError) as e:
        logging.warning(f"cli._solve_rate_point: p={traffic.p} Dmax={qos.Dmax} s infeasible: {e}")
        row.update(Ptx_w=float("nan"), eta_bits_per_j=float("nan"), feasible=False)
        return row
    row.update(Ptx_w=solution.Ptx, eta_bits_per_j=solution.eta, feasible=True)
    return row


def cmd_sweep_rate(spec: ExperimentSpec) -> pd.DataFrame:
    """Optimal energy efficiency over the arrival probability, one block per delay bound."""
    system, traffic, qos = spec.load()
    tasks = [
        (system,
         params.TrafficModel(p=p, Lbar=traffic.Lbar, Ts=system.Ts),
         params.QoSTarget(Dmax=Dmax, eps=qos.eps, Ts=system.Ts),
         spec.tol)
        for Dmax in spec.dmax_grid
        for p in spec.p_grid
    ]
    logging.info(f"cli.cmd_sweep_rate: {len(tasks)} points, workers={spec.workers}")

    frame = pd.DataFrame(_map_points(_solve_rate_point, tasks, spec.workers), columns=SWEEP_RATE_COLUMNS)
    _write_csv(frame, spec.out_path)
    print(f"{int(frame['feasible'].sum())}/{len(frame)} feasible points")
    return frame


HANDLERS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "ccdf-compare": cmd_ccdf_compare,
    "sweep-delay": cmd_sweep_delay,
    "sweep-rate": cmd_sweep_rate,
}


def run(spec: ExperimentSpec) -> int:
    """Dispatch a spec and map library errors to exit codes."""
    context = f"cli.run[{spec.command}]"
    try:
        HANDLERS[spec.command](spec)
    except (ConfigError, DomainError) as e:
        logging.error(f"{context}: invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleError, UnstableError) as e:
        logging.error(f"{context}: {type(e).__name__}: {e} {e.diagnostics}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (QuadratureError, NoSolutionError, MaxIterationsError) as e:
        logging.error(f"{context}: numerical failure {type(e).__name__}: {e} {e.diagnostics}")
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
    except ConfigError as e:
        logging.error(f"cli.main: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return run(spec)
