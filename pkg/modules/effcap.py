"""
Effective bandwidth of the source and effective capacity of the fading link.

The source is Bernoulli-exponential (TrafficModel). The service in slot n is
S[n] = Ts*Bc*log2(1 + Ptx*gamma[n]/(Lp*N0*Bc)) with gamma[n] Nakagami-m
distributed SNR, i.e. Gamma(shape m, scale gamma_bar/m), IID over slots.

The QoS exponent u* balances both sides:

    (1 - u*Lbar) / (1 - (1-p)*u*Lbar) = E[exp(-u*S)]

Two solvers are provided: the fixed point of that balance for a given power,
and the closed form that meets a delay-outage target with equality.

Expectations over the fading distribution are computed by generalized
Gauss-Laguerre quadrature (weight x^(m-1) e^-x), doubling the node count
until two rules agree; scipy's adaptive quad over log-SNR is the fallback.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, linalg, optimize, special

from modules import validators
from modules.errors import DomainError, NoSolutionError, QuadratureError, UnstableError
from modules.params import QoSTarget, SystemParams, TrafficModel


QUAD_START_NODES = 64
QUAD_MAX_NODES = 512
QUAD_RTOL = 1e-10
# accepted relative error of the adaptive fallback, and accepted agreement of
# the two largest rules when the fallback misses it too
QUAD_FALLBACK_RTOL = 1e-6

# bracket and tolerance of the u*Lbar bisection
EXPONENT_BRACKET = (1e-12, 1.0 - 1e-12)
EXPONENT_XTOL = 1e-12
EXPONENT_MAXITER = 200


@dataclass(frozen=True)
class QoSExponent:
    """Decay rate u* (1/bits) of the queue-length tail."""
    u_star: float

    def __post_init__(self):
        is_valid, error_msg = validators.validate_non_negative_float(self.u_star, "u_star", "effcap.QoSExponent")
        if not is_valid:
            raise DomainError(error_msg)

    def scaled(self, traffic: TrafficModel) -> float:
        """u*Lbar, the dimensionless exponent."""
        return self.u_star * traffic.Lbar


def _check_exponent(u: float, traffic: TrafficModel, context: str, positive: bool = False) -> float:
    """Validate 0 <= u*Lbar < 1 (0 < u*Lbar when positive) and return u*Lbar."""
    validate = validators.validate_positive_float if positive else validators.validate_non_negative_float
    is_valid, error_msg = validate(u, "u", context)
    if not is_valid:
        raise DomainError(error_msg)

    scaled = u * traffic.Lbar
    if scaled >= 1.0:
        error_msg = f"u*Lbar must be < 1 (arrival MGF diverges), got {scaled}"
        logging.error(f"{context}: {error_msg}")
        raise DomainError(error_msg, {"u": u, "u_Lbar": scaled})
    return scaled


def _check_power(Ptx: float, context: str, positive: bool = False) -> None:
    validate = validators.validate_positive_float if positive else validators.validate_non_negative_float
    is_valid, error_msg = validate(Ptx, "Ptx", context)
    if not is_valid:
        raise DomainError(error_msg)


# ===== SOURCE SIDE =====

def arrival_mgf(u: float, traffic: TrafficModel) -> float:
    """
    Moment generating function of the per-slot arrival, E[exp(u*A)].

    Equals (1-p) + p/(1-u*Lbar); diverges for u*Lbar >= 1.
    """
    scaled = _check_exponent(u, traffic, "effcap.arrival_mgf")
    return (1.0 - traffic.p) + traffic.p / (1.0 - scaled)


def _log_arrival_mgf(scaled: float, p: float) -> float:
    # ln(1 + p*y/(1-y)), exact for small y
    return math.log1p(p * scaled / (1.0 - scaled))


def effective_bandwidth(u: float, traffic: TrafficModel) -> float:
    """
    Effective bandwidth alpha_b(u) = ln(E[exp(u*A)]) / (u*Ts) in bits/s.

    Tends to the mean rate mu as u -> 0+ and grows with u.

    Args:
        u (float): Exponent in 1/bits, 0 < u*Lbar < 1
        traffic (TrafficModel): The source

    Returns:
        float: Effective bandwidth in bits/s
    """
    scaled = _check_exponent(u, traffic, "effcap.effective_bandwidth", positive=True)
    return _log_arrival_mgf(scaled, traffic.p) / (u * traffic.Ts)


def delay_exponent(u: float, traffic: TrafficModel) -> float:
    """Delay decay rate theta* = u*alpha_b(u) in 1/s."""
    scaled = _check_exponent(u, traffic, "effcap.delay_exponent")
    return _log_arrival_mgf(scaled, traffic.p) / traffic.Ts


def qos_exponent_from_constraint(traffic: TrafficModel, qos: QoSTarget) -> QoSExponent:
    """
    Exponent that meets the delay-outage target with equality:
    u* = (beta - 1) / ((p + beta - 1) * Lbar), beta = eps^(-Ts/(Dmax+Ts)).

    eps = 1 gives beta = 1 and u* = 0.
    """
    beta = qos.beta
    u_star = (beta - 1.0) / ((traffic.p + beta - 1.0) * traffic.Lbar)
    logging.debug(f"effcap.qos_exponent_from_constraint: beta={beta:.12g} u*Lbar={u_star * traffic.Lbar:.12g}")
    return QoSExponent(u_star)


# ===== FADING EXPECTATIONS =====

@lru_cache(maxsize=64)
def _laguerre_rule(n: int, m: float) -> Tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    n-point rule for the probability measure x^(m-1) e^-x / Gamma(m).

    Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
    generalized Laguerre recursion, weights the squared first components of
    the normalized eigenvectors (they sum to one).
    """
    alpha = m - 1.0
    k = np.arange(n, dtype=float)
    diagonal = 2.0 * k + alpha + 1.0
    off_diagonal = np.sqrt(k[1:] * (k[1:] + alpha))
    nodes, vectors = linalg.eigh_tridiagonal(diagonal, off_diagonal)
    weights = vectors[0, :] ** 2
    weights = weights / weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _adaptive_expectation(func: Callable[[NDArray[np.float64]], NDArray[np.float64]], params: SystemParams) -> Tuple[float, float]:
    """
    Adaptive quad over t = ln(gamma), where the density's x^(m-1) factor and
    the log1p kink of the service both turn into smooth tails.

    Only the relative tolerance applies; expectations near 1e-12 are common.
    """
    m = params.m
    scale = params.gamma_bar / params.m
    log_norm = special.gammaln(m) + m * math.log(scale)

    def integrand(t: float) -> float:
        if t > 700.0:
            return 0.0
        snr = math.exp(t)
        log_density = m * t - snr / scale - log_norm
        if log_density < -745.0:
            return 0.0
        return float(func(np.array([snr]))[0]) * math.exp(log_density)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(integrand, -np.inf, np.inf, epsabs=0.0, epsrel=QUAD_RTOL, limit=500)
    return value, abserr


def nakagami_expectation(func: Callable[[NDArray[np.float64]], NDArray[np.float64]], params: SystemParams) -> float:
    """
    E[func(gamma)] for gamma ~ Gamma(shape m, scale gamma_bar/m).

    Gauss-Laguerre with the density's x^(m-1) e^-x absorbed into the weights;
    64 nodes first, doubled until two successive rules agree to relative
    1e-10 or 512 nodes are reached. Beyond that the adaptive scipy quad
    takes over and must report a relative error below 1e-6; failing that,
    the 512-node rule is kept if it agrees with the 256-node rule to 1e-6.

    Args:
        func: Vectorized function of the linear SNR
        params (SystemParams): Supplies m and gamma_bar

    Returns:
        float: The expectation

    Raises:
        QuadratureError: if neither scheme converges
    """
    context = "effcap.nakagami_expectation"
    scale = params.gamma_bar / params.m

    def rule(n: int) -> float:
        nodes, weights = _laguerre_rule(n, params.m)
        return float(np.dot(weights, func(scale * nodes)))

    n = QUAD_START_NODES
    previous = rule(n)
    history = [(n, previous)]
    while n < QUAD_MAX_NODES:
        n *= 2
        current = rule(n)
        history.append((n, current))
        if abs(current - previous) <= QUAD_RTOL * abs(current):
            return current
        previous = current

    logging.debug(f"{context}: Gauss-Laguerre not converged at {n} nodes ({history[-2:]}), using adaptive quadrature")
    value, abserr = _adaptive_expectation(func, params)
    if math.isfinite(value) and abserr <= QUAD_FALLBACK_RTOL * abs(value):
        return value

    (_, coarse), (_, fine) = history[-2:]
    if math.isfinite(fine) and abs(fine - coarse) <= QUAD_FALLBACK_RTOL * abs(fine):
        logging.debug(f"{context}: adaptive abserr={abserr:.3g} on {value:.12g}, keeping the {n}-node rule {fine:.12g}")
        return fine

    diagnostics = {"laguerre": history, "adaptive_value": value, "adaptive_abserr": abserr, "m": params.m}
    logging.error(f"{context}: expectation did not converge: {diagnostics}")
    raise QuadratureError("fading expectation did not converge", diagnostics)


def _snr_gain(Ptx: float, params: SystemParams) -> float:
    # multiplies gamma inside log2(1 + .)
    return Ptx / params.noise_power


def laplace_service(u: float, Ptx: float, params: SystemParams) -> float:
    """
    Laplace transform of the slot service, E[exp(-u*S)].

    Computed as E[(1 + Ptx*gamma/(Lp*N0*Bc))^(-u*phi)] with phi = Ts*Bc/ln 2.
    Lies in (0, 1]; equals 1 when u = 0 or Ptx = 0.

    Args:
        u (float): Exponent in 1/bits, u >= 0
        Ptx (float): Transmission power in W, Ptx >= 0
        params (SystemParams): The link

    Returns:
        float: E[exp(-u*S)]
    """
    context = "effcap.laplace_service"
    is_valid, error_msg = validators.validate_non_negative_float(u, "u", context)
    if not is_valid:
        raise DomainError(error_msg)
    _check_power(Ptx, context)

    if u == 0.0 or Ptx == 0.0:
        return 1.0

    exponent = u * params.phi
    gain = _snr_gain(Ptx, params)
    return nakagami_expectation(lambda snr: np.exp(-exponent * np.log1p(gain * snr)), params)


def _laplace_service_complement(u: float, Ptx: float, params: SystemParams) -> float:
    """1 - E[exp(-u*S)], accurate when u*S is small."""
    exponent = u * params.phi
    gain = _snr_gain(Ptx, params)
    return nakagami_expectation(lambda snr: -np.expm1(-exponent * np.log1p(gain * snr)), params)


def effective_capacity(u: float, Ptx: float, params: SystemParams) -> float:
    """
    Effective capacity alpha_c(u) = -ln(E[exp(-u*S)]) / (u*Ts) in bits/s.

    Increasing in Ptx, decreasing in u, and below the mean capacity E[C]
    for every u > 0.
    """
    context = "effcap.effective_capacity"
    is_valid, error_msg = validators.validate_positive_float(u, "u", context)
    if not is_valid:
        raise DomainError(error_msg)
    _check_power(Ptx, context, positive=True)

    complement = _laplace_service_complement(u, Ptx, params)
    return -math.log1p(-complement) / (u * params.Ts)


def mean_capacity(Ptx: float, params: SystemParams) -> float:
    """Ergodic Shannon rate E[C] = Bc*E[log2(1 + Ptx*gamma/(Lp*N0*Bc))] in bits/s."""
    _check_power(Ptx, "effcap.mean_capacity")
    if Ptx == 0.0:
        return 0.0
    gain = _snr_gain(Ptx, params)
    return params.Bc * nakagami_expectation(lambda snr: np.log1p(gain * snr) / math.log(2.0), params)


def mean_service_bits(Ptx: float, params: SystemParams) -> float:
    """Mean service per slot E[S] = Ts*E[C] in bits."""
    return params.Ts * mean_capacity(Ptx, params)


# ===== QOS EXPONENT OF A GIVEN POWER =====

def _balance_gap_scaled(scaled: float, Ptx: float, traffic: TrafficModel, params: SystemParams) -> float:
    # lhs - rhs written as (1 - rhs) - (1 - lhs) so both terms keep their digits near u = 0
    lhs_complement = traffic.p * scaled / (1.0 - (1.0 - traffic.p) * scaled)
    rhs_complement = _laplace_service_complement(scaled / traffic.Lbar, Ptx, params)
    return rhs_complement - lhs_complement


def balance_gap(u: float, Ptx: float, traffic: TrafficModel, params: SystemParams) -> float:
    """
    lhs(u) - rhs(u) of the balance equation, where
    lhs = (1 - u*Lbar)/(1 - (1-p)*u*Lbar) and rhs = E[exp(-u*S)].

    Positive just above u = 0 for a stable link, negative as u*Lbar -> 1.
    """
    scaled = _check_exponent(u, traffic, "effcap.balance_gap")
    _check_power(Ptx, "effcap.balance_gap")
    return _balance_gap_scaled(scaled, Ptx, traffic, params)


def solve_qos_exponent_for_power(Ptx: float, traffic: TrafficModel, params: SystemParams) -> QoSExponent:
    """
    QoS exponent of a link transmitting at constant power Ptx.

    Bisection on u*Lbar over (1e-12, 1 - 1e-12) with tolerance 1e-12.

    Args:
        Ptx (float): Transmission power in W
        traffic (TrafficModel): The source
        params (SystemParams): The link

    Returns:
        QoSExponent: The unique root u* of the balance equation

    Raises:
        UnstableError: if p*Lbar >= E[S]
        NoSolutionError: if the balance has no sign change in the bracket
    """
    context = "effcap.solve_qos_exponent_for_power"

    # ===== INPUT VALIDATION SECTION =====

    _check_power(Ptx, context, positive=True)

    mean_service = mean_service_bits(Ptx, params)
    mean_arrival = traffic.p * traffic.Lbar
    if not mean_arrival < mean_service:
        diagnostics = {"Ptx": Ptx, "mean_arrival_bits": mean_arrival, "mean_service_bits": mean_service}
        logging.error(f"{context}: unstable link {diagnostics}")
        raise UnstableError(f"p*Lbar={mean_arrival:.6g} bits is not below E[S]={mean_service:.6g} bits", diagnostics)

    # ===== END VALIDATION SECTION =====

    low, high = EXPONENT_BRACKET
    gap_low = _balance_gap_scaled(low, Ptx, traffic, params)
    gap_high = _balance_gap_scaled(high, Ptx, traffic, params)
    if not (gap_low > 0.0 > gap_high):
        diagnostics = {"Ptx": Ptx, "u_Lbar_bracket": (low, high), "gap_low": gap_low, "gap_high": gap_high}
        logging.error(f"{context}: no sign change in bracket {diagnostics}")
        raise NoSolutionError("balance equation has no sign change in (0, 1/Lbar)", diagnostics)

    scaled, result = optimize.bisect(
        _balance_gap_scaled, low, high,
        args=(Ptx, traffic, params),
        xtol=EXPONENT_XTOL,
        maxiter=EXPONENT_MAXITER,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise NoSolutionError("bisection did not converge", {"Ptx": Ptx, "iterations": result.iterations})

    logging.debug(f"{context}: Ptx={Ptx:.6g} W -> u*Lbar={scaled:.12g} after {result.iterations} iterations")
    return QoSExponent(scaled / traffic.Lbar)
