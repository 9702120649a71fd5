"""
Tests for the params module.

This module tests:
- dB / dBm unit conversions and the distance-based path loss
- Validation of the SystemParams, TrafficModel and QoSTarget records
- Parsing of key=value configuration documents and --set overrides
"""

import math

import pytest

from modules import config
from modules import params
from modules.errors import ConfigError, DomainError


REFERENCE_DOCUMENT = """
# reference link
Ts_s=0.001
Bc_hz=180000
N0_dbm_hz=-174
m=2
gamma_bar_db=10
d_km=1
Pc_w=0.1
Pidle_w=0.03

p=0.5
Lbar_bits=700
Dmax_s=0.01
eps=0.01
"""


class TestUnitConversions:
    """Test suite for the unit helpers."""

    def test_db_to_linear_and_back(self):
        """10 dB is a factor of ten and converting back returns the input."""
        assert params.db_to_linear(10.0) == pytest.approx(10.0)
        assert params.db_to_linear(0.0) == pytest.approx(1.0)
        assert params.linear_to_db(params.db_to_linear(-3.5)) == pytest.approx(-3.5)

    def test_dbm_to_watt(self):
        """30 dBm is 1 W and the thermal noise density is about 3.98e-21 W/Hz."""
        assert params.dbm_to_watt(30.0) == pytest.approx(1.0)
        assert params.dbm_to_watt(-174.0) == pytest.approx(3.981071705534973e-21, rel=1e-12)
        assert params.watt_to_dbm(0.001) == pytest.approx(0.0, abs=1e-12)

    def test_conversions_work_on_arrays(self):
        """The helpers accept sequences."""
        values = params.db_to_linear([0.0, 10.0, 20.0])
        assert list(values) == pytest.approx([1.0, 10.0, 100.0])

    def test_path_loss_at_one_km(self):
        """At 1 km only the intercept remains."""
        assert params.path_loss_db(1.0) == pytest.approx(128.1)

    def test_path_loss_grows_with_distance(self):
        """Ten times the distance adds the slope."""
        assert params.path_loss_db(10.0) - params.path_loss_db(1.0) == pytest.approx(37.6)
        assert params.path_loss_db(0.5) == pytest.approx(128.1 + 37.6 * math.log10(0.5))

    @pytest.mark.parametrize("distance", [0.0, -1.0, float("nan")])
    def test_path_loss_rejects_invalid_distance(self, distance):
        """Non-positive or NaN distances raise DomainError."""
        with pytest.raises(DomainError):
            params.path_loss_db(distance)


class TestParameterRecords:
    """Test suite for the frozen parameter records."""

    def test_reference_link_derived_values(self, link):
        """Lp, the scaled noise power and phi follow from the fields."""
        assert link.Lp == pytest.approx(10 ** 12.81, rel=1e-12)
        assert link.noise_power == pytest.approx(link.Lp * link.N0 * link.Bc)
        assert link.phi == pytest.approx(1e-3 * 180e3 / math.log(2.0))
        assert link.Pmax == config.DEFAULT_PMAX_W

    def test_reference_params_overrides(self):
        """Keyword arguments replace single fields."""
        link = params.reference_params(m=4.0, d=0.5)
        assert link.m == 4.0
        assert link.Lp == pytest.approx(10 ** (params.path_loss_db(0.5) / 10))

    def test_system_params_is_frozen(self, link):
        """Records cannot be mutated."""
        with pytest.raises(Exception):
            link.m = 3.0

    @pytest.mark.parametrize("field, value, key", [
        ("m", 0.4, "m"),
        ("Ts", 0.0, "Ts_s"),
        ("Bc", -1.0, "Bc_hz"),
        ("Pc", -0.1, "Pc_w"),
        ("Pidle", 10.0, "Pidle_w"),
        ("d", 1e-4, "d_km"),
    ])
    def test_system_params_rejects_bad_fields(self, field, value, key):
        """Out-of-range fields raise ConfigError naming the configuration key."""
        with pytest.raises(ConfigError) as excinfo:
            params.reference_params(**{field: value})
        assert excinfo.value.key == key

    def test_traffic_mean_rate(self, traffic_350k):
        """mu = Lbar*p/Ts."""
        assert traffic_350k.mu == pytest.approx(350e3)

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.01])
    def test_traffic_rejects_bad_probability(self, p):
        """p must lie in (0, 1]."""
        with pytest.raises(ConfigError):
            params.TrafficModel(p=p, Lbar=700.0, Ts=1e-3)

    def test_traffic_accepts_saturated_source(self):
        """p = 1 is a packet in every slot."""
        assert params.TrafficModel(p=1.0, Lbar=100.0, Ts=1e-3).mu == pytest.approx(1e5)

    def test_qos_beta(self, qos_10ms):
        """beta = eps^(-Ts/(Dmax+Ts))."""
        assert qos_10ms.beta == pytest.approx(0.01 ** (-1.0 / 11.0), rel=1e-14)
        assert not qos_10ms.unconstrained

    def test_qos_without_constraint(self):
        """eps = 1 gives beta = 1."""
        qos = params.QoSTarget(Dmax=0.01, eps=1.0, Ts=1e-3)
        assert qos.beta == 1.0
        assert qos.unconstrained

    @pytest.mark.parametrize("eps", [0.0, -0.5, 1.5])
    def test_qos_rejects_bad_eps(self, eps):
        """eps must lie in (0, 1]."""
        with pytest.raises(ConfigError) as excinfo:
            params.QoSTarget(Dmax=0.01, eps=eps, Ts=1e-3)
        assert excinfo.value.key == "eps"

    def test_config_error_is_value_error(self):
        """Callers catching ValueError also catch configuration errors."""
        with pytest.raises(ValueError):
            params.QoSTarget(Dmax=0.0, eps=0.01, Ts=1e-3)


class TestConfigDocuments:
    """Test suite for parse_config and load_config."""

    def test_parse_reference_document(self):
        """dB keys are converted and Pmax defaults to 10 W."""
        system, traffic, qos = params.parse_config(REFERENCE_DOCUMENT)
        assert system.gamma_bar == pytest.approx(10.0)
        assert system.N0 == pytest.approx(params.dbm_to_watt(-174.0))
        assert system.Pmax == 10.0
        assert traffic.mu == pytest.approx(350e3)
        assert qos.Dmax == 0.01
        assert qos.Ts == system.Ts == traffic.Ts

    def test_parse_matches_reference_params(self):
        """The document describes the same link as reference_params()."""
        system, _, _ = params.parse_config(REFERENCE_DOCUMENT)
        assert system == params.reference_params()

    def test_overrides_are_applied_before_validation(self):
        """--set style overrides replace document values."""
        _, traffic, qos = params.parse_config(REFERENCE_DOCUMENT, {"p": "0.25", "eps": "0.1"})
        assert traffic.p == 0.25
        assert qos.eps == 0.1

    def test_invalid_override_is_rejected(self):
        """An override with an out-of-range value fails like a file value."""
        with pytest.raises(ConfigError) as excinfo:
            params.parse_config(REFERENCE_DOCUMENT, {"eps": "2"})
        assert excinfo.value.key == "eps"

    def test_missing_key(self):
        """Dropping a required key raises ConfigError naming it."""
        document = REFERENCE_DOCUMENT.replace("Lbar_bits=700\n", "")
        with pytest.raises(ConfigError) as excinfo:
            params.parse_config(document)
        assert excinfo.value.key == "Lbar_bits"

    def test_unknown_key(self):
        """Keys outside the schema are rejected."""
        with pytest.raises(ConfigError) as excinfo:
            params.parse_config(REFERENCE_DOCUMENT + "Ptx_w=1\n")
        assert excinfo.value.key == "Ptx_w"

    @pytest.mark.parametrize("raw", ["abc", "", "inf"])
    def test_unparsable_value(self, raw):
        """Non-numeric, empty and infinite values are rejected."""
        document = REFERENCE_DOCUMENT.replace("m=2\n", f"m={raw}\n")
        with pytest.raises(ConfigError) as excinfo:
            params.parse_config(document)
        assert excinfo.value.key == "m"

    def test_explicit_pmax(self):
        """Pmax_w overrides the default search bound."""
        system, _, _ = params.parse_config(REFERENCE_DOCUMENT + "Pmax_w=2.5\n")
        assert system.Pmax == 2.5

    def test_load_shipped_config(self):
        """The shipped delay sweep document parses."""
        system, traffic, qos = params.load_config(config.CONFIGS_DIR / "delay_sweep.env")
        assert traffic.Lbar == 1488.0
        assert qos.eps == 0.01
        assert system.m == 2.0

    def test_reference_document_matches_reference_params(self):
        """reference_link.env describes the same link as reference_params()."""
        system, traffic, qos = params.load_config(config.CONFIGS_DIR / "reference_link.env")
        expected = params.reference_params()
        for field in ("Ts", "Bc", "N0", "m", "gamma_bar", "d", "Lp", "Pc", "Pidle", "Pmax"):
            assert getattr(system, field) == pytest.approx(getattr(expected, field), rel=1e-12)
        assert (traffic.p, traffic.Lbar) == (0.5, 1488.0)
        assert (qos.Dmax, qos.eps) == (0.01, 0.01)

    def test_load_missing_file(self, tmp_path):
        """A missing file raises ConfigError."""
        with pytest.raises(ConfigError):
            params.load_config(tmp_path / "missing.env")
