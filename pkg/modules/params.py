"""
Unit-safe parameters for the point-to-point link.

This module owns the three immutable parameter records used everywhere else:
- SystemParams: physical layer (slot, bandwidth, noise, fading, path loss, circuit powers)
- TrafficModel: Bernoulli arrivals with exponentially distributed packet lengths
- QoSTarget: delay bound and delay-outage tolerance

Configuration documents are flat key=value text parsed with python-dotenv.
Keys that carry decibel values say so in their suffix (`_db`, `_dbm_hz`), and
every other key is in SI units (seconds, Hz, watts, bits, km).

Usage:
    from modules import params

    system, traffic, qos = params.load_config("data/configs/delay_sweep.env")
"""

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from modules import config
from modules import validators
from modules.errors import ConfigError, DomainError


# Macro-cell path loss at a 2 GHz carrier, d in km
PATH_LOSS_INTERCEPT_DB = 128.1
PATH_LOSS_SLOPE_DB = 37.6

REQUIRED_KEYS = (
    "Ts_s", "Bc_hz", "N0_dbm_hz", "m", "gamma_bar_db", "d_km",
    "Pc_w", "Pidle_w", "p", "Lbar_bits", "Dmax_s", "eps",
)
OPTIONAL_KEYS = {"Pmax_w": config.DEFAULT_PMAX_W}
CONFIG_KEYS = REQUIRED_KEYS + tuple(OPTIONAL_KEYS)


# ===== UNIT CONVERSIONS =====

def db_to_linear(value_db):
    """Convert a power ratio from dB to linear scale (works on arrays)."""
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """Convert a linear power ratio to dB (works on arrays)."""
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def dbm_to_watt(value_dbm):
    """Convert dBm (or dBm/Hz) to W (or W/Hz)."""
    return np.power(10.0, (np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(value_w):
    """Convert W (or W/Hz) to dBm (or dBm/Hz)."""
    return 10.0 * np.log10(np.asarray(value_w, dtype=float)) + 30.0


def path_loss_db(d: float) -> float:
    """
    Distance-based path loss of a macro-cell link, 128.1 + 37.6*log10(d).

    Args:
        d (float): Transmitter-receiver distance in km

    Returns:
        float: Path loss in dB

    Raises:
        DomainError: if d is not a positive number
    """
    context = "params.path_loss_db"
    is_valid, error_msg = validators.validate_positive_float(d, "d_km", context)
    if not is_valid:
        raise DomainError(error_msg)

    return PATH_LOSS_INTERCEPT_DB + PATH_LOSS_SLOPE_DB * math.log10(d)


def _require(is_valid: bool, error_msg: Optional[str], key: str) -> None:
    if not is_valid:
        raise ConfigError(key, error_msg)


# ===== PARAMETER RECORDS =====

@dataclass(frozen=True)
class SystemParams:
    """
    Physical-layer constants of the link.

    All fields are linear SI values. Lp is derived from d at construction.
    Pmax is only the upper end of the power search bracket.
    """
    Ts: float
    Bc: float
    N0: float
    m: float
    gamma_bar: float
    d: float
    Pc: float
    Pidle: float
    Pmax: float = config.DEFAULT_PMAX_W
    Lp: float = field(init=False)

    def __post_init__(self):
        context = "params.SystemParams"
        _require(*validators.validate_positive_float(self.Ts, "Ts_s", context), "Ts_s")
        _require(*validators.validate_positive_float(self.Bc, "Bc_hz", context), "Bc_hz")
        _require(*validators.validate_positive_float(self.N0, "N0_dbm_hz", context), "N0_dbm_hz")
        # Nakagami-m is defined for m >= 1/2
        _require(*validators.validate_range(self.m, 0.5, None, "m", context=context), "m")
        _require(*validators.validate_positive_float(self.gamma_bar, "gamma_bar_db", context), "gamma_bar_db")
        _require(*validators.validate_positive_float(self.d, "d_km", context), "d_km")
        _require(*validators.validate_non_negative_float(self.Pc, "Pc_w", context), "Pc_w")
        _require(*validators.validate_positive_float(self.Pmax, "Pmax_w", context), "Pmax_w")
        _require(*validators.validate_range(self.Pidle, 0.0, self.Pmax, "Pidle_w",
                                            upper_inclusive=False, context=context), "Pidle_w")

        Lp = float(db_to_linear(path_loss_db(self.d)))
        if Lp <= 1.0:
            raise ConfigError("d_km", f"path loss must exceed 0 dB, got {linear_to_db(Lp):.3f} dB at d={self.d} km")
        object.__setattr__(self, "Lp", Lp)

    @property
    def noise_power(self) -> float:
        """Received noise scaled by path loss, Lp*N0*Bc (W)."""
        return self.Lp * self.N0 * self.Bc

    @property
    def phi(self) -> float:
        """Ts*Bc/ln(2): bits per slot per nat of channel capacity."""
        return self.Ts * self.Bc / math.log(2.0)


@dataclass(frozen=True)
class TrafficModel:
    """
    Bernoulli-exponential source: a packet arrives in a slot with probability p
    and its length is exponential with mean Lbar bits.
    """
    p: float
    Lbar: float
    Ts: float
    mu: float = field(init=False)

    def __post_init__(self):
        context = "params.TrafficModel"
        _require(*validators.validate_range(self.p, 0.0, 1.0, "p", lower_inclusive=False, context=context), "p")
        _require(*validators.validate_positive_float(self.Lbar, "Lbar_bits", context), "Lbar_bits")
        _require(*validators.validate_positive_float(self.Ts, "Ts_s", context), "Ts_s")
        object.__setattr__(self, "mu", self.Lbar * self.p / self.Ts)


@dataclass(frozen=True)
class QoSTarget:
    """
    Delay-outage target {Dmax, eps}: P(D > Dmax) <= eps.

    eps = 1 is accepted and means no constraint (beta = 1).
    """
    Dmax: float
    eps: float
    Ts: float
    beta: float = field(init=False)

    def __post_init__(self):
        context = "params.QoSTarget"
        _require(*validators.validate_positive_float(self.Dmax, "Dmax_s", context), "Dmax_s")
        _require(*validators.validate_range(self.eps, 0.0, 1.0, "eps", lower_inclusive=False, context=context), "eps")
        _require(*validators.validate_positive_float(self.Ts, "Ts_s", context), "Ts_s")
        object.__setattr__(self, "beta", self.eps ** (-self.Ts / (self.Dmax + self.Ts)))

    @property
    def unconstrained(self) -> bool:
        return self.eps == 1.0


def reference_params(**overrides) -> SystemParams:
    """
    Link parameters of the reference setting: Ts=1 ms, Bc=180 kHz,
    N0=-174 dBm/Hz, m=2, gamma_bar=10 dB, d=1 km, Pc=0.1 W, Pidle=0.03 W.

    Keyword arguments replace individual SystemParams fields.
    """
    values = dict(
        Ts=1e-3,
        Bc=180e3,
        N0=float(dbm_to_watt(-174.0)),
        m=2.0,
        gamma_bar=float(db_to_linear(10.0)),
        d=1.0,
        Pc=0.1,
        Pidle=0.03,
        Pmax=config.DEFAULT_PMAX_W,
    )
    values.update(overrides)
    return SystemParams(**values)


# ===== CONFIGURATION DOCUMENTS =====

def _parse_float(raw: Mapping[str, Optional[str]], key: str) -> float:
    text = raw.get(key)
    if text is None or str(text).strip() == "":
        raise ConfigError(key, "value is empty or unparsable")
    try:
        value = float(str(text).strip())
    except ValueError:
        raise ConfigError(key, f"unparsable number: {text!r}")
    if not math.isfinite(value):
        raise ConfigError(key, f"value must be finite, got {text!r}")
    return value


def parse_config(text: str, overrides: Optional[Mapping[str, str]] = None) -> Tuple[SystemParams, TrafficModel, QoSTarget]:
    """
    Parse a key=value configuration document into the three parameter records.

    dB-valued keys are converted to linear units; Pmax_w defaults to 10 W.

    Args:
        text (str): The configuration document
        overrides (Optional[Mapping[str, str]]): key=value pairs applied on top of
            the document before validation (e.g. from --set on the command line)

    Returns:
        Tuple[SystemParams, TrafficModel, QoSTarget]

    Raises:
        ConfigError: missing key, unknown key, unparsable or out-of-range value
    """
    context = "params.parse_config"

    # ===== INPUT VALIDATION SECTION =====

    raw: Dict[str, Optional[str]] = dict(dotenv_values(stream=io.StringIO(text)))
    for key, value in (overrides or {}).items():
        raw[key] = value

    for key in raw:
        if key not in CONFIG_KEYS:
            logging.error(f"{context}: unknown configuration key {key}")
            raise ConfigError(key, "unknown configuration key")

    for key in REQUIRED_KEYS:
        if key not in raw:
            logging.error(f"{context}: missing required key {key}")
            raise ConfigError(key, "missing required key")

    # ===== END VALIDATION SECTION =====

    values = {key: _parse_float(raw, key) for key in REQUIRED_KEYS}
    for key, default in OPTIONAL_KEYS.items():
        values[key] = _parse_float(raw, key) if key in raw else default

    system = SystemParams(
        Ts=values["Ts_s"],
        Bc=values["Bc_hz"],
        N0=float(dbm_to_watt(values["N0_dbm_hz"])),
        m=values["m"],
        gamma_bar=float(db_to_linear(values["gamma_bar_db"])),
        d=values["d_km"],
        Pc=values["Pc_w"],
        Pidle=values["Pidle_w"],
        Pmax=values["Pmax_w"],
    )
    traffic = TrafficModel(p=values["p"], Lbar=values["Lbar_bits"], Ts=system.Ts)
    qos = QoSTarget(Dmax=values["Dmax_s"], eps=values["eps"], Ts=system.Ts)

    logging.info(
        f"{context}: parsed link d={system.d} km (Lp={linear_to_db(system.Lp):.2f} dB), "
        f"traffic mu={traffic.mu:.1f} bit/s, target Dmax={qos.Dmax} s eps={qos.eps}"
    )
    return system, traffic, qos


def load_config(path: Union[str, Path], overrides: Optional[Mapping[str, str]] = None) -> Tuple[SystemParams, TrafficModel, QoSTarget]:
    """Read a configuration file and parse it with parse_config."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"configuration file not found: {path}")
    return parse_config(path.read_text(), overrides)
