"""
Minimum constant transmission power under a delay-outage target.

Maximizing the cross-layer energy efficiency of a two-mode transceiver

    eta = mu / (Ptx + Pc - (Ptx - Pidle) * u*Lbar * (1-p))

under P(D > Dmax) <= eps reduces to finding the smallest Ptx for which the
link's QoS exponent reaches the closed-form target u*, that is

    E[(1 + Ptx*gamma/(Lp*N0*Bc))^(-u*phi)] = (1 - u*Lbar)/(1 - (1-p)*u*Lbar) = 1/beta

The left side decreases in Ptx, so the root is found by bisection on a bracket
whose lower end is the larger of the analytic lower bound P_l and the
stability threshold, and whose upper end is Pmax.

The method-1 baseline assumes every packet waits (p_w = 1). It targets a
larger exponent and is priced as single-mode circuitry.

Usage:
    from modules import power_control

    solution = power_control.solve_min_power(traffic, qos, system)
    print(solution.Ptx, solution.eta)
"""

import logging
import math
from dataclasses import dataclass

import pandas as pd
from scipy import optimize

from modules import config
from modules import effcap
from modules import validators
from modules.effcap import QoSExponent
from modules.errors import DomainError, InfeasibleError, MaxIterationsError, UnstableError
from modules.params import QoSTarget, SystemParams, TrafficModel


MAX_BISECTION_ITERATIONS = 200
# absolute stop on the power bracket width (W)
POWER_XTOL_W = 1e-9
# lower bracket end sits just above P_l
LOWER_BOUND_MARGIN = 1e-12
THRESHOLD_MAXITER = 200
# power returned without a delay constraint, relative to the stability threshold
DEGENERATE_MARGIN = 1.001

SOLUTION_COLUMNS = ["Ptx_w", "u_star", "eta_bits_per_j", "P_l_w", "residual", "iterations", "feasible"]


@dataclass(frozen=True)
class PowerSolution:
    """
    Result of a minimum-power solve.

    residual is |E[exp(-u*S)] - 1/beta| at Ptx. degenerate marks the
    unconstrained case (eps = 1), where Ptx is the stability threshold
    times DEGENERATE_MARGIN and u_star is 0.
    """
    Ptx: float
    u_star: float
    eta: float
    P_l: float
    residual: float
    iterations: int
    feasible: bool = True
    degenerate: bool = False

    def __post_init__(self):
        context = "power_control.PowerSolution"
        for name in ("Ptx", "eta", "P_l"):
            is_valid, error_msg = validators.validate_positive_float(getattr(self, name), name, context)
            if not is_valid:
                raise DomainError(error_msg)
        if not self.Ptx > self.P_l:
            raise DomainError(f"Ptx={self.Ptx} must exceed the lower bound P_l={self.P_l}")


# ===== ENERGY EFFICIENCY =====

def energy_efficiency(Ptx: float, u: QoSExponent, traffic: TrafficModel, params: SystemParams) -> float:
    """
    Cross-layer energy efficiency of the two-mode circuitry in bits/J.

    The transceiver is idle with probability p_idle = u*Lbar*(1-p) and
    transmits otherwise, so the mean power is Ptx*p_tx + Pidle*p_idle + Pc.

    Args:
        Ptx (float): Transmission power in W
        u (QoSExponent): QoS exponent of the link at Ptx
        traffic (TrafficModel): The source
        params (SystemParams): Circuit powers Pc and Pidle

    Returns:
        float: mu / mean power

    Raises:
        DomainError: if u*Lbar >= 1 or the mean power is not positive
    """
    context = "power_control.energy_efficiency"

    # ===== INPUT VALIDATION SECTION =====

    is_valid, error_msg = validators.validate_non_negative_float(Ptx, "Ptx", context)
    if not is_valid:
        raise DomainError(error_msg)

    scaled = u.scaled(traffic)
    if scaled >= 1.0:
        logging.error(f"{context}: u*Lbar must be < 1, got {scaled}")
        raise DomainError(f"u*Lbar must be < 1, got {scaled}")

    # ===== END VALIDATION SECTION =====

    p_idle = scaled * (1.0 - traffic.p)
    mean_power = Ptx + params.Pc - (Ptx - params.Pidle) * p_idle
    if not mean_power > 0.0:
        logging.error(f"{context}: non-positive mean power {mean_power} at Ptx={Ptx}")
        raise DomainError(f"mean power must be > 0, got {mean_power}", {"Ptx": Ptx, "p_idle": p_idle})

    return traffic.mu / mean_power


def power_lower_bound(u: QoSExponent, traffic: TrafficModel, params: SystemParams) -> float:
    """
    Lower bound P_l on the power that reaches the QoS exponent u*.

    From ln(1+x) <= x and the Gamma moment generating function:

        P_l = (m*ln2*Lp*N0/(gamma_bar*Ts)) * (1/u*) * ((1 + p*x/(1-x))^(1/m) - 1),  x = u*Lbar

    Raises:
        DomainError: unless 0 < u*Lbar < 1
    """
    context = "power_control.power_lower_bound"
    scaled = u.scaled(traffic)
    if not 0.0 < scaled < 1.0:
        logging.error(f"{context}: 0 < u*Lbar < 1 required, got {scaled}")
        raise DomainError(f"0 < u*Lbar < 1 required, got {scaled}", {"u_star": u.u_star})

    coefficient = params.m * math.log(2.0) * params.Lp * params.N0 / (params.gamma_bar * params.Ts)
    growth = math.expm1(math.log1p(traffic.p * scaled / (1.0 - scaled)) / params.m)
    return coefficient * growth / u.u_star


def power_lower_bound_limit(traffic: TrafficModel, params: SystemParams) -> float:
    """Limit of power_lower_bound as u* -> 0+: ln2*Lp*N0*p*Lbar/(gamma_bar*Ts)."""
    return math.log(2.0) * params.Lp * params.N0 * traffic.p * traffic.Lbar / (params.gamma_bar * params.Ts)


def energy_efficiency_upper(u: QoSExponent, traffic: TrafficModel, params: SystemParams) -> float:
    """eta_u = energy_efficiency(P_l, u*): no power reaching u* does better."""
    P_l = power_lower_bound(u, traffic, params)
    return energy_efficiency(P_l, u, traffic, params)


# ===== STABILITY =====

def check_stability(Ptx: float, traffic: TrafficModel, params: SystemParams) -> bool:
    """True iff p*Lbar < E[S] at Ptx (strict)."""
    is_valid, error_msg = validators.validate_non_negative_float(Ptx, "Ptx", "power_control.check_stability")
    if not is_valid:
        raise DomainError(error_msg)
    return traffic.p * traffic.Lbar < effcap.mean_service_bits(Ptx, params)


def stability_threshold_power(traffic: TrafficModel, params: SystemParams) -> float:
    """
    Power at which E[S] equals p*Lbar, by Brent's method on (0, Pmax).

    Raises:
        UnstableError: if even Pmax does not stabilize the queue
    """
    context = "power_control.stability_threshold_power"
    mean_arrival = traffic.p * traffic.Lbar

    def surplus(Ptx: float) -> float:
        return effcap.mean_service_bits(Ptx, params) - mean_arrival

    surplus_at_max = surplus(params.Pmax)
    if not surplus_at_max > 0.0:
        diagnostics = {"Pmax": params.Pmax, "mean_arrival_bits": mean_arrival,
                       "mean_service_bits": surplus_at_max + mean_arrival}
        logging.error(f"{context}: queue unstable even at Pmax {diagnostics}")
        raise UnstableError(f"Pmax={params.Pmax} W cannot serve p*Lbar={mean_arrival:.6g} bits per slot", diagnostics)

    threshold = optimize.brentq(surplus, 0.0, params.Pmax, xtol=1e-15, maxiter=THRESHOLD_MAXITER)
    logging.debug(f"{context}: stability threshold {threshold:.9g} W")
    return threshold


# ===== MINIMUM POWER =====

def _constraint_target(scaled: float, p: float) -> float:
    # (1 - x)/(1 - (1-p)x), equal to 1/beta at the closed-form exponent
    return (1.0 - scaled) / (1.0 - (1.0 - p) * scaled)


def method1_exponent(traffic: TrafficModel, qos: QoSTarget) -> QoSExponent:
    """
    Exponent of the method-1 baseline, which drops the p_w prefactor and the
    extra slot: r^(Dmax/Ts) = eps gives u* = (beta1 - 1)/((p + beta1 - 1)*Lbar)
    with beta1 = eps^(-Ts/Dmax).
    """
    beta1 = qos.eps ** (-qos.Ts / qos.Dmax)
    return QoSExponent((beta1 - 1.0) / ((traffic.p + beta1 - 1.0) * traffic.Lbar))


def _degenerate_solution(traffic: TrafficModel, params: SystemParams, context: str) -> PowerSolution:
    threshold = stability_threshold_power(traffic, params)
    Ptx = threshold * DEGENERATE_MARGIN
    if Ptx > params.Pmax:
        diagnostics = {"stability_threshold": threshold, "Pmax": params.Pmax}
        logging.error(f"{context}: no margin above the stability threshold below Pmax {diagnostics}")
        raise InfeasibleError("stability threshold too close to Pmax", diagnostics)

    no_exponent = QoSExponent(0.0)
    logging.warning(
        f"{context}: eps = 1 leaves no delay constraint; returning stability threshold "
        f"{threshold:.6g} W x {DEGENERATE_MARGIN}"
    )
    return PowerSolution(
        Ptx=Ptx,
        u_star=0.0,
        eta=energy_efficiency(Ptx, no_exponent, traffic, params),
        P_l=power_lower_bound_limit(traffic, params),
        residual=0.0,
        iterations=0,
        feasible=True,
        degenerate=True,
    )


def _solve_power_for_exponent(u: QoSExponent, traffic: TrafficModel, params: SystemParams, tol: float, context: str):
    """
    Bisection for laplace_service(u*, Ptx) = target, keeping the constraint
    violated at the lower end and satisfied at the upper end.

    Returns (Ptx, P_l, residual, iterations).
    """
    scaled = u.scaled(traffic)
    target = _constraint_target(scaled, traffic.p)
    P_l = power_lower_bound(u, traffic, params)
    high = params.Pmax

    excess_at_max = effcap.laplace_service(u.u_star, high, params) - target
    if excess_at_max > 0.0:
        diagnostics = {"u_star": u.u_star, "Pmax": high, "target": target, "excess_at_Pmax": excess_at_max}
        logging.error(f"{context}: delay-outage target unreachable at Pmax {diagnostics}")
        raise InfeasibleError(f"delay-outage target cannot be met at Pmax={high} W", diagnostics)

    # reachable at Pmax implies stable at Pmax
    threshold = stability_threshold_power(traffic, params)
    low = max(P_l * (1.0 + LOWER_BOUND_MARGIN), threshold)
    if low >= high:
        diagnostics = {"P_l": P_l, "stability_threshold": threshold, "Pmax": params.Pmax}
        logging.error(f"{context}: empty power bracket {diagnostics}")
        raise InfeasibleError("lower power bound is not below Pmax", diagnostics)

    for iteration in range(1, MAX_BISECTION_ITERATIONS + 1):
        Ptx = 0.5 * (low + high)
        excess = effcap.laplace_service(u.u_star, Ptx, params) - target
        logging.debug(f"{context}: iteration {iteration} Ptx={Ptx:.12g} excess={excess:.3e} bracket=[{low:.12g}, {high:.12g}]")
        if abs(excess) <= tol or high - low < POWER_XTOL_W:
            return Ptx, P_l, abs(excess), iteration
        if excess > 0.0:
            low = Ptx
        else:
            high = Ptx

    diagnostics = {"bracket": (low, high), "iterations": MAX_BISECTION_ITERATIONS, "tol": tol}
    logging.error(f"{context}: power bisection did not converge {diagnostics}")
    raise MaxIterationsError("power bisection did not converge", diagnostics)


def _check_tolerance(tol: float, context: str) -> None:
    is_valid, error_msg = validators.validate_positive_float(tol, "tol", context)
    if not is_valid:
        raise DomainError(error_msg)


def _ensure_stable(Ptx: float, traffic: TrafficModel, params: SystemParams, context: str) -> None:
    if not check_stability(Ptx, traffic, params):
        diagnostics = {"Ptx": Ptx, "mean_arrival_bits": traffic.p * traffic.Lbar}
        logging.error(f"{context}: solved power leaves the queue unstable {diagnostics}")
        raise UnstableError(f"solved Ptx={Ptx:.6g} W does not stabilize the queue", diagnostics)


def solve_min_power(traffic: TrafficModel, qos: QoSTarget, params: SystemParams, tol: float = config.DEFAULT_TOL) -> PowerSolution:
    """
    Smallest constant power meeting P(D > Dmax) <= eps, which is also the
    most energy-efficient one.

    Args:
        traffic (TrafficModel): The source
        qos (QoSTarget): Delay bound and outage tolerance
        params (SystemParams): The link, Pmax caps the search
        tol (float): Stop when |E[exp(-u*S)] - 1/beta| <= tol

    Returns:
        PowerSolution

    Raises:
        InfeasibleError: if Pmax cannot meet the target
        UnstableError: if Pmax (or the solved power) cannot stabilize the queue
        MaxIterationsError: if the bisection runs out of iterations
    """
    context = "power_control.solve_min_power"
    _check_tolerance(tol, context)

    if qos.unconstrained:
        return _degenerate_solution(traffic, params, context)

    u = effcap.qos_exponent_from_constraint(traffic, qos)
    logging.info(f"{context}: Dmax={qos.Dmax} s eps={qos.eps} -> u*Lbar={u.scaled(traffic):.9g}")

    Ptx, P_l, residual, iterations = _solve_power_for_exponent(u, traffic, params, tol, context)
    _ensure_stable(Ptx, traffic, params, context)

    solution = PowerSolution(
        Ptx=Ptx,
        u_star=u.u_star,
        eta=energy_efficiency(Ptx, u, traffic, params),
        P_l=P_l,
        residual=residual,
        iterations=iterations,
    )
    logging.info(f"{context}: Ptx={Ptx:.9g} W eta={solution.eta:.6g} bits/J after {iterations} iterations")
    return solution


def solve_min_power_method1(traffic: TrafficModel, qos: QoSTarget, params: SystemParams, tol: float = config.DEFAULT_TOL) -> PowerSolution:
    """
    Power of the method-1 baseline: same inversion, but at method1_exponent
    and priced as single-mode circuitry, eta = mu/(Ptx + Pc).
    """
    context = "power_control.solve_min_power_method1"
    _check_tolerance(tol, context)

    if qos.unconstrained:
        return _degenerate_solution(traffic, params, context)

    u = method1_exponent(traffic, qos)
    Ptx, P_l, residual, iterations = _solve_power_for_exponent(u, traffic, params, tol, context)
    _ensure_stable(Ptx, traffic, params, context)

    solution = PowerSolution(
        Ptx=Ptx,
        u_star=u.u_star,
        eta=traffic.mu / (Ptx + params.Pc),
        P_l=P_l,
        residual=residual,
        iterations=iterations,
    )
    logging.info(f"{context}: Ptx={Ptx:.9g} W eta={solution.eta:.6g} bits/J after {iterations} iterations")
    return solution


def solution_to_frame(solution: PowerSolution) -> pd.DataFrame:
    """One-row frame in the CSV schema Ptx_w,u_star,eta_bits_per_j,P_l_w,residual,iterations,feasible."""
    row = {
        "Ptx_w": solution.Ptx,
        "u_star": solution.u_star,
        "eta_bits_per_j": solution.eta,
        "P_l_w": solution.P_l,
        "residual": solution.residual,
        "iterations": solution.iterations,
        "feasible": solution.feasible,
    }
    return pd.DataFrame([row], columns=SOLUTION_COLUMNS)
