"""
Analytic delay and queue-length tails of the Bernoulli-exponential queue.

With x = u*Lbar the per-slot delay decay ratio is

    r = (1 - x) / (1 - x + p*x)

and the nonzero delay probability p_w = P(D > 0) equals r itself, so

    P(D > t)        ~ p_w * r^(t/Ts)          (tag "proposition1")
    P(D > Dmax)     ~ r^(Dmax/Ts + 1)         (the delay-outage probability)
    P(Q > B)        ~ (1 - x) * exp(-u*B)

Two rival approximations are kept for comparison only: method1 drops the
prefactor (p_w = 1) and method2 replaces it with mu/E[C].
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import pandas as pd

from modules import effcap
from modules import validators
from modules.effcap import QoSExponent
from modules.errors import DomainError, UnstableError
from modules.params import QoSTarget, SystemParams, TrafficModel


PW_PREFACTOR = "proposition1"
METHOD1 = "method1_pw_one"
METHOD2 = "method2_ratio"
EMPIRICAL = "empirical"
CCDF_METHODS = (PW_PREFACTOR, METHOD1, METHOD2, EMPIRICAL)

CCDF_COLUMNS = ["t_s", "prob", "method"]


@dataclass(frozen=True)
class DelayCcdf:
    """
    Delay CCDF sampled on a grid: points are (t in seconds, P(D > t)).
    """
    points: Tuple[Tuple[float, float], ...]
    method: str

    def __post_init__(self):
        context = "delay_model.DelayCcdf"
        if self.method not in CCDF_METHODS:
            raise DomainError(f"unknown CCDF method {self.method!r}, expected one of {CCDF_METHODS}")

        times = [t for t, _ in self.points]
        is_valid, error_msg = validators.validate_sorted_grid(times, "t", context)
        if not is_valid:
            raise DomainError(error_msg)

        probs = [prob for _, prob in self.points]
        for prob in probs:
            is_valid, error_msg = validators.validate_range(prob, 0.0, 1.0, "prob", context=context)
            if not is_valid:
                raise DomainError(error_msg)
        for previous, current in zip(probs, probs[1:]):
            if current > previous:
                raise DomainError(f"CCDF must be non-increasing, got {previous} then {current}")

    @property
    def times(self) -> Tuple[float, ...]:
        return tuple(t for t, _ in self.points)

    @property
    def probs(self) -> Tuple[float, ...]:
        return tuple(prob for _, prob in self.points)

    def to_frame(self) -> pd.DataFrame:
        """Rows of the CSV schema t_s,prob,method."""
        return pd.DataFrame(
            {"t_s": self.times, "prob": self.probs, "method": [self.method] * len(self.points)},
            columns=CCDF_COLUMNS,
        )


def _scaled_exponent(u: QoSExponent, traffic: TrafficModel, context: str, positive: bool = False) -> float:
    scaled = u.scaled(traffic)
    if scaled >= 1.0 or (positive and scaled <= 0.0):
        bounds = "0 < u*Lbar < 1" if positive else "0 <= u*Lbar < 1"
        error_msg = f"{bounds} required, got u*Lbar={scaled}"
        logging.error(f"{context}: {error_msg}")
        raise DomainError(error_msg, {"u_star": u.u_star, "Lbar": traffic.Lbar})
    return scaled


def _check_time(t: float, name: str, context: str) -> None:
    is_valid, error_msg = validators.validate_non_negative_float(t, name, context)
    if not is_valid:
        raise DomainError(error_msg)


def _decay_ratio(scaled: float, p: float) -> float:
    return (1.0 - scaled) / (1.0 - scaled + p * scaled)


def _slot_decay(u: QoSExponent, traffic: TrafficModel, t: float) -> float:
    # r^(t/Ts) = exp(-theta* t), theta* = ln(1/r)/Ts
    return math.exp(-effcap.delay_exponent(u.u_star, traffic) * t)


def nonzero_delay_prob(u: QoSExponent, traffic: TrafficModel) -> float:
    """
    Probability that a packet waits at all, p_w = (1 - x)/(1 - x + p*x), x = u*Lbar.

    Equals 1 exactly when u* = 0.
    """
    scaled = _scaled_exponent(u, traffic, "delay_model.nonzero_delay_prob")
    return _decay_ratio(scaled, traffic.p)


def nonempty_buffer_prob(u: QoSExponent, traffic: TrafficModel) -> float:
    """p_b = P(Q > 0) = 1 - u*Lbar."""
    scaled = _scaled_exponent(u, traffic, "delay_model.nonempty_buffer_prob")
    return 1.0 - scaled


def delay_ccdf_approx(u: QoSExponent, traffic: TrafficModel, t: float) -> float:
    """
    P(D > t) ~ p_w * r^(t/Ts); t/Ts may be non-integer.

    At t = 0 this is p_w, and every slot multiplies it by r = p_w.
    """
    context = "delay_model.delay_ccdf_approx"
    _check_time(t, "t", context)
    ratio = _decay_ratio(_scaled_exponent(u, traffic, context), traffic.p)
    return ratio * _slot_decay(u, traffic, t)


def delay_outage(u: QoSExponent, traffic: TrafficModel, qos: QoSTarget) -> float:
    """
    Delay-outage probability P(D > Dmax) ~ r^(Dmax/Ts + 1).

    This is delay_ccdf_approx at t = Dmax; decreasing in u*.
    """
    ratio = _decay_ratio(_scaled_exponent(u, traffic, "delay_model.delay_outage"), traffic.p)
    return ratio ** (qos.Dmax / qos.Ts + 1.0)


def delay_ccdf_method1(u: QoSExponent, traffic: TrafficModel, t: float) -> float:
    """Rival approximation assuming p_w = 1: P(D > t) ~ r^(t/Ts)."""
    context = "delay_model.delay_ccdf_method1"
    _check_time(t, "t", context)
    _scaled_exponent(u, traffic, context)
    return _slot_decay(u, traffic, t)


def delay_ccdf_method2(u: QoSExponent, traffic: TrafficModel, Ptx: float, params: SystemParams, t: float) -> float:
    """
    Rival approximation with p_w replaced by mu/E[C]: P(D > t) ~ (mu/E[C]) * r^(t/Ts).

    Raises:
        UnstableError: if E[C] <= mu
    """
    context = "delay_model.delay_ccdf_method2"
    _check_time(t, "t", context)
    _scaled_exponent(u, traffic, context)

    mean_rate = effcap.mean_capacity(Ptx, params)
    if not mean_rate > traffic.mu:
        diagnostics = {"Ptx": Ptx, "mean_capacity": mean_rate, "mu": traffic.mu}
        logging.error(f"{context}: mean capacity does not exceed the arrival rate {diagnostics}")
        raise UnstableError(f"E[C]={mean_rate:.6g} bit/s is not above mu={traffic.mu:.6g} bit/s", diagnostics)

    return (traffic.mu / mean_rate) * _slot_decay(u, traffic, t)


def queue_ccdf(u: QoSExponent, traffic: TrafficModel, B: float) -> float:
    """Queue-length tail P(Q > B) ~ (1 - u*Lbar) * exp(-u*B), B in bits."""
    context = "delay_model.queue_ccdf"
    _check_time(B, "B", context)
    scaled = _scaled_exponent(u, traffic, context)
    return (1.0 - scaled) * math.exp(-u.u_star * B)


def mean_queue_bits(u: QoSExponent, traffic: TrafficModel) -> float:
    """E[Q] = p_b/u* in bits."""
    scaled = _scaled_exponent(u, traffic, "delay_model.mean_queue_bits", positive=True)
    return (1.0 - scaled) / u.u_star


def mean_delay(u: QoSExponent, traffic: TrafficModel) -> float:
    """
    Mean per-packet delay E[D] = Ts * p_w * (p*x - x + 1)/(p*x) in seconds.

    Satisfies Little's law E[D]*mu = p_b/u*. Diverges at u* = 0.

    Raises:
        DomainError: if u* = 0
    """
    scaled = _scaled_exponent(u, traffic, "delay_model.mean_delay", positive=True)
    pw = _decay_ratio(scaled, traffic.p)
    return traffic.Ts * pw * (traffic.p * scaled - scaled + 1.0) / (traffic.p * scaled)


def build_ccdf(
    method: str,
    u: QoSExponent,
    traffic: TrafficModel,
    t_grid: Sequence[float],
    Ptx: Optional[float] = None,
    params: Optional[SystemParams] = None,
) -> DelayCcdf:
    """
    Evaluate one analytic approximation on a delay grid.

    Args:
        method (str): PW_PREFACTOR, METHOD1 or METHOD2
        u (QoSExponent): QoS exponent of the link
        traffic (TrafficModel): The source
        t_grid (Sequence[float]): Strictly increasing delays in seconds
        Ptx (Optional[float]): Transmission power, required by METHOD2
        params (Optional[SystemParams]): The link, required by METHOD2

    Returns:
        DelayCcdf: The sampled curve
    """
    context = "delay_model.build_ccdf"
    is_valid, error_msg = validators.validate_sorted_grid(list(t_grid), "t_grid", context)
    if not is_valid:
        raise DomainError(error_msg)

    if method == PW_PREFACTOR:
        probs = [delay_ccdf_approx(u, traffic, t) for t in t_grid]
    elif method == METHOD1:
        probs = [delay_ccdf_method1(u, traffic, t) for t in t_grid]
    elif method == METHOD2:
        if Ptx is None or params is None:
            raise DomainError(f"{METHOD2} needs Ptx and params")
        probs = [delay_ccdf_method2(u, traffic, Ptx, params, t) for t in t_grid]
    else:
        raise DomainError(f"{method!r} is not an analytic CCDF method")

    return DelayCcdf(points=tuple(zip(map(float, t_grid), probs)), method=method)
