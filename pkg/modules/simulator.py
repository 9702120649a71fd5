"""
Discrete-time Monte Carlo of the buffered fading link.

Slot n runs three steps:
1. a packet arrives with probability p (exponential length, mean Lbar) and
   joins the tail of an infinite FIFO buffer
2. the slot is in transmission mode iff the buffer is nonempty now, else idle
3. S[n] = Ts*Bc*log2(1 + Ptx*gamma[n]/(Lp*N0*Bc)) bits drain the buffer from
   the head; packets may be served partially across slots

A packet's delay is (departure slot - arrival slot)*Ts where the departure
slot is the one serving its last bit, so a packet finished in its arrival
slot has delay 0. The queue length is sampled at the end of every slot.
The buffer is empty at slot 0.

Random numbers come from a PCG64 generator seeded by
SeedSequence(seed, spawn_key=(replication,)); draws are taken in chunks, per
chunk first the arrival coin flips, then the lengths, then the SNRs.
"""

import logging
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from modules import power_control
from modules import validators
from modules.delay_model import EMPIRICAL, DelayCcdf
from modules.errors import DomainError
from modules.params import SystemParams, TrafficModel


CHUNK_SLOTS = 1 << 16
# slack when comparing whole-slot delays to a grid point t/Ts
SLOT_COMPARE_SLACK = 1e-9

STATS_COLUMNS = ["stat", "value"]


def make_rng(seed: int, replication: int = 0) -> np.random.Generator:
    """Independent PCG64 stream for (seed, replication)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replication,))))


@dataclass(frozen=True)
class SimConfig:
    """
    One simulation run.

    ccdf_grid holds delays in seconds and queue_grid buffer levels in bits,
    both strictly increasing. The first warmup_slots slots are simulated but
    left out of every statistic. keep_trace records (arrival, departure)
    slots of every measured packet.
    """
    params: SystemParams
    traffic: TrafficModel
    Ptx: float
    n_slots: int
    seed: int
    ccdf_grid: Tuple[float, ...]
    queue_grid: Tuple[float, ...] = ()
    replication: int = 0
    warmup_slots: int = 0
    keep_trace: bool = False

    def __post_init__(self):
        context = "simulator.SimConfig"
        checks = [
            validators.validate_non_negative_float(self.Ptx, "Ptx", context),
            validators.validate_positive_integer(self.n_slots, min_value=1, context=context),
            validators.validate_positive_integer(self.seed, min_value=0, context=context),
            validators.validate_positive_integer(self.replication, min_value=0, context=context),
            validators.validate_positive_integer(self.warmup_slots, min_value=0,
                                                 max_value=self.n_slots - 1, context=context),
            validators.validate_sorted_grid(list(self.ccdf_grid), "ccdf_grid", context),
        ]
        if self.queue_grid:
            checks.append(validators.validate_sorted_grid(list(self.queue_grid), "queue_grid", context))
        for is_valid, error_msg in checks:
            if not is_valid:
                raise DomainError(error_msg)

        object.__setattr__(self, "ccdf_grid", tuple(float(t) for t in self.ccdf_grid))
        object.__setattr__(self, "queue_grid", tuple(float(b) for b in self.queue_grid))


@dataclass(frozen=True)
class SimStats:
    """
    Measurements of one run.

    mean_delay_s is NaN when no packet departed inside the measured window.
    arrived_bits, served_bits and final_queue_bits count the whole run,
    warm-up included.
    """
    delay_ccdf: DelayCcdf
    queue_ccdf: Tuple[Tuple[float, float], ...]
    p_tx_hat: float
    p_idle_hat: float
    p_w_hat: float
    mean_delay_s: float
    mean_queue_bits: float
    packets: int
    mu_hat: float
    eta_hat: float
    arrived_bits: float
    served_bits: float
    final_queue_bits: float
    stable: bool
    seed: int
    replication: int
    trace: Optional[Tuple[Tuple[int, int], ...]] = None


# ===== SAMPLING =====

def sample_snr(params: SystemParams, rng: np.random.Generator, size: Optional[int] = None):
    """Nakagami-m SNR draws, Gamma(shape m, scale gamma_bar/m)."""
    draws = rng.gamma(params.m, params.gamma_bar / params.m, size=size)
    return float(draws) if size is None else draws


def sample_arrival(traffic: TrafficModel, rng: np.random.Generator, size: Optional[int] = None):
    """Bits arriving in a slot: 0 with probability 1-p, else Exp(mean Lbar)."""
    arrives = rng.random(size=size) < traffic.p
    lengths = rng.exponential(traffic.Lbar, size=size)
    draws = np.where(arrives, lengths, 0.0)
    return float(draws) if size is None else draws


def service_bits(snr, Ptx: float, params: SystemParams):
    """
    Bits served in a slot, Ts*Bc*log2(1 + Ptx*snr/(Lp*N0*Bc)).

    Works on scalars and arrays.
    """
    gain = Ptx / params.noise_power
    served = params.Ts * params.Bc * np.log2(1.0 + gain * np.asarray(snr, dtype=float))
    return float(served) if np.ndim(served) == 0 else served


def _draw_chunk(config: SimConfig, rng: np.random.Generator, size: int):
    arrivals = sample_arrival(config.traffic, rng, size)
    snr = sample_snr(config.params, rng, size)
    return arrivals, service_bits(snr, config.Ptx, config.params)


# ===== SIMULATION =====

def empirical_efficiency(stats: SimStats, params: SystemParams, Ptx: float) -> float:
    """
    Measured energy efficiency mu_hat/(Ptx*p_tx_hat + Pidle*p_idle_hat + Pc) in bits/J.
    """
    mean_power = Ptx * stats.p_tx_hat + params.Pidle * stats.p_idle_hat + params.Pc
    if not mean_power > 0.0:
        raise DomainError(f"mean power must be > 0, got {mean_power}")
    return stats.mu_hat / mean_power


def _empirical_ccdf(delay_slots: np.ndarray, grid: Sequence[float], Ts: float) -> DelayCcdf:
    if delay_slots.size == 0:
        probs = [0.0] * len(grid)
    else:
        probs = [float(np.mean(delay_slots > t / Ts + SLOT_COMPARE_SLACK)) for t in grid]
    return DelayCcdf(points=tuple(zip(grid, probs)), method=EMPIRICAL)


def run_simulation(config: SimConfig) -> SimStats:
    """
    Simulate config.n_slots slots and measure delays, modes and backlog.

    Unstable configurations (p*Lbar >= E[S]) run anyway and come back with
    stable=False.

    Args:
        config (SimConfig): The run

    Returns:
        SimStats: Measurements over slots warmup_slots..n_slots-1
    """
    context = "simulator.run_simulation"
    params, traffic = config.params, config.traffic

    stable = power_control.check_stability(config.Ptx, traffic, params)
    if not stable:
        logging.warning(f"{context}: Ptx={config.Ptx} W does not stabilize the queue, statistics will not settle")
    logging.info(f"{context}: {config.n_slots} slots at Ptx={config.Ptx:.6g} W seed={config.seed} replication={config.replication}")

    rng = make_rng(config.seed, config.replication)
    warmup = config.warmup_slots

    # entries are [remaining bits, arrival slot]
    buffer: deque = deque()
    backlog = 0.0
    backlog_trace = np.empty(config.n_slots, dtype=float)
    tx_slots = 0
    delays: List[int] = []
    trace: List[Tuple[int, int]] = []
    arrived_total = 0.0
    served_total = 0.0
    arrived_measured = 0.0

    for start in range(0, config.n_slots, CHUNK_SLOTS):
        size = min(CHUNK_SLOTS, config.n_slots - start)
        arrivals, budgets = (draws.tolist() for draws in _draw_chunk(config, rng, size))

        for offset in range(size):
            slot = start + offset
            bits = arrivals[offset]
            if bits > 0.0:
                buffer.append([bits, slot])
                backlog += bits
                arrived_total += bits
                if slot >= warmup:
                    arrived_measured += bits

            if buffer and slot >= warmup:
                tx_slots += 1

            budget = budgets[offset]
            while buffer and budget > 0.0:
                head = buffer[0]
                if head[0] <= budget:
                    budget -= head[0]
                    served_total += head[0]
                    backlog -= head[0]
                    buffer.popleft()
                    if head[1] >= warmup:
                        delays.append(slot - head[1])
                        if config.keep_trace:
                            trace.append((head[1], slot))
                else:
                    head[0] -= budget
                    served_total += budget
                    backlog -= budget
                    budget = 0.0

            if not buffer:
                backlog = 0.0
            backlog_trace[slot] = backlog

    measured_slots = config.n_slots - warmup
    measured_backlog = backlog_trace[warmup:]
    delay_slots = np.asarray(delays, dtype=np.int64)
    final_queue = float(sum(entry[0] for entry in buffer))

    queue_grid = config.queue_grid
    queue_ccdf = tuple((b, float(np.mean(measured_backlog > b))) for b in queue_grid)

    p_tx_hat = tx_slots / measured_slots
    stats = SimStats(
        delay_ccdf=_empirical_ccdf(delay_slots, config.ccdf_grid, params.Ts),
        queue_ccdf=queue_ccdf,
        p_tx_hat=p_tx_hat,
        p_idle_hat=1.0 - p_tx_hat,
        p_w_hat=float(np.mean(delay_slots > 0)) if delay_slots.size else 0.0,
        mean_delay_s=float(np.mean(delay_slots)) * params.Ts if delay_slots.size else float("nan"),
        mean_queue_bits=float(np.mean(measured_backlog)),
        packets=int(delay_slots.size),
        mu_hat=arrived_measured / (measured_slots * params.Ts),
        eta_hat=0.0,
        arrived_bits=arrived_total,
        served_bits=served_total,
        final_queue_bits=final_queue,
        stable=stable,
        seed=config.seed,
        replication=config.replication,
        trace=tuple(trace) if config.keep_trace else None,
    )
    stats = replace(stats, eta_hat=empirical_efficiency(stats, params, config.Ptx))

    logging.info(
        f"{context}: {stats.packets} packets, p_w_hat={stats.p_w_hat:.4f}, "
        f"p_idle_hat={stats.p_idle_hat:.4f}, eta_hat={stats.eta_hat:.6g} bits/J"
    )
    return stats


def run_replications(config: SimConfig, n_replications: int, workers: int = 1) -> List[SimStats]:
    """
    Run replications 0..n_replications-1 of config, each on its own stream.

    Results are ordered by replication index; workers > 1 uses a process pool.
    """
    context = "simulator.run_replications"
    for value in (n_replications, workers):
        is_valid, error_msg = validators.validate_positive_integer(value, min_value=1, context=context)
        if not is_valid:
            raise DomainError(error_msg)

    configs = [replace(config, replication=index) for index in range(n_replications)]
    if workers == 1:
        return [run_simulation(item) for item in configs]

    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run_simulation, configs))


def stats_to_frame(stats: SimStats) -> pd.DataFrame:
    """Scalar statistics as stat,value rows; queue tail points appear as P(Q>B) rows."""
    rows = [
        ("p_tx_hat", stats.p_tx_hat),
        ("p_idle_hat", stats.p_idle_hat),
        ("p_w_hat", stats.p_w_hat),
        ("mean_delay_s", stats.mean_delay_s),
        ("mean_queue_bits", stats.mean_queue_bits),
        ("packets", stats.packets),
        ("mu_hat_bps", stats.mu_hat),
        ("eta_hat_bits_per_j", stats.eta_hat),
        ("arrived_bits", stats.arrived_bits),
        ("served_bits", stats.served_bits),
        ("final_queue_bits", stats.final_queue_bits),
        ("stable", int(stats.stable)),
        ("seed", stats.seed),
        ("replication", stats.replication),
    ]
    rows.extend((f"P(Q>{b:g})", prob) for b, prob in stats.queue_ccdf)
    return pd.DataFrame(rows, columns=STATS_COLUMNS)
