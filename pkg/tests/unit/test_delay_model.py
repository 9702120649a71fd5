"""
Tests for the delay_model module.
"""

import numpy as np
import pandas as pd
import pytest

from modules import delay_model
from modules import effcap
from modules.effcap import QoSExponent
from modules.errors import DomainError, UnstableError
from modules.params import TrafficModel


def _exponent(scaled: float, Lbar: float) -> QoSExponent:
    return QoSExponent(scaled / Lbar)


class TestDelayTail:
    """Test suite for the nonzero delay probability and delay CCDF."""

    def test_nonzero_delay_prob_formula(self, traffic_350k):
        """p_w = (1-x)/(1-x+p*x)."""
        u = _exponent(0.4, 700.0)
        assert delay_model.nonzero_delay_prob(u, traffic_350k) == pytest.approx(0.6 / 0.8, rel=1e-14)

    def test_no_exponent_means_everyone_waits(self, traffic_350k):
        """u* = 0 gives p_w = 1 and a flat tail."""
        u = QoSExponent(0.0)
        assert delay_model.nonzero_delay_prob(u, traffic_350k) == 1.0
        assert delay_model.delay_ccdf_approx(u, traffic_350k, 0.05) == 1.0
        assert delay_model.queue_ccdf(u, traffic_350k, 5000.0) == 1.0

    def test_saturated_source_never_waits_at_zero(self):
        """With p = 1 and x > 0, p_w = 1 - x."""
        traffic = TrafficModel(p=1.0, Lbar=500.0, Ts=1e-3)
        u = _exponent(0.3, 500.0)
        assert delay_model.nonzero_delay_prob(u, traffic) == pytest.approx(0.7)

    def test_tail_starts_at_pw(self, traffic_350k):
        """P(D > 0) = p_w."""
        u = _exponent(0.5, 700.0)
        pw = delay_model.nonzero_delay_prob(u, traffic_350k)
        assert delay_model.delay_ccdf_approx(u, traffic_350k, 0.0) == pytest.approx(pw, rel=1e-14)

    def test_one_slot_ratio_is_pw(self, traffic_350k):
        """P(D > t + Ts)/P(D > t) = p_w for every t."""
        u = _exponent(0.35, 700.0)
        pw = delay_model.nonzero_delay_prob(u, traffic_350k)
        for t in np.arange(0.0, 0.05, 0.0037):
            ratio = delay_model.delay_ccdf_approx(u, traffic_350k, t + 1e-3) / delay_model.delay_ccdf_approx(u, traffic_350k, t)
            assert ratio == pytest.approx(pw, rel=1e-12)

    def test_outage_is_tail_at_dmax(self, traffic_350k, qos_10ms):
        """The delay-outage probability is the tail evaluated at Dmax."""
        u = _exponent(0.25, 700.0)
        assert delay_model.delay_outage(u, traffic_350k, qos_10ms) == pytest.approx(
            delay_model.delay_ccdf_approx(u, traffic_350k, qos_10ms.Dmax), rel=1e-12)

    def test_outage_decreases_with_exponent(self, traffic_350k, qos_10ms):
        """A larger exponent always lowers the outage probability."""
        values = [delay_model.delay_outage(_exponent(x, 700.0), traffic_350k, qos_10ms)
                  for x in np.linspace(0.001, 0.999, 200)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_negative_time_rejected(self, traffic_350k):
        """t < 0 raises DomainError."""
        with pytest.raises(DomainError):
            delay_model.delay_ccdf_approx(_exponent(0.2, 700.0), traffic_350k, -1e-3)

    def test_exponent_outside_domain(self, traffic_350k):
        """u*Lbar >= 1 raises DomainError."""
        with pytest.raises(DomainError):
            delay_model.nonzero_delay_prob(_exponent(1.0, 700.0), traffic_350k)


class TestRivalApproximations:
    """Test suite for method1 and method2 tails."""

    def test_method1_drops_the_prefactor(self, traffic_350k):
        """method1 = prefactor curve / p_w, never below it."""
        u = _exponent(0.3, 700.0)
        pw = delay_model.nonzero_delay_prob(u, traffic_350k)
        for t in [0.0, 0.004, 0.02]:
            approx = delay_model.delay_ccdf_approx(u, traffic_350k, t)
            method1 = delay_model.delay_ccdf_method1(u, traffic_350k, t)
            assert method1 == pytest.approx(approx / pw, rel=1e-12)
            assert method1 >= approx

    def test_method1_is_one_at_zero(self, traffic_350k):
        """Without the prefactor the tail starts at 1."""
        assert delay_model.delay_ccdf_method1(_exponent(0.3, 700.0), traffic_350k, 0.0) == 1.0

    def test_tail_decays_at_delay_exponent(self, traffic_350k):
        """r^(t/Ts) = exp(-theta* t), so each slot multiplies the tail by p_w."""
        u = _exponent(0.3, 700.0)
        theta = effcap.delay_exponent(u.u_star, traffic_350k)
        pw = delay_model.nonzero_delay_prob(u, traffic_350k)
        assert delay_model.delay_ccdf_method1(u, traffic_350k, 0.0035) == pytest.approx(np.exp(-theta * 0.0035), rel=1e-12)
        assert delay_model.delay_ccdf_method1(u, traffic_350k, 1e-3) == pytest.approx(pw, rel=1e-12)

    def test_method2_ordering(self, traffic_350k, link):
        """method2 lies below the prefactor curve exactly when mu/E[C] <= p_w."""
        for Ptx in [0.01, 0.05, 0.5]:
            u = effcap.solve_qos_exponent_for_power(Ptx, traffic_350k, link)
            pw = delay_model.nonzero_delay_prob(u, traffic_350k)
            prefactor = traffic_350k.mu / effcap.mean_capacity(Ptx, link)
            approx = delay_model.delay_ccdf_approx(u, traffic_350k, 0.01)
            method2 = delay_model.delay_ccdf_method2(u, traffic_350k, Ptx, link, 0.01)
            assert method2 == pytest.approx(approx * prefactor / pw, rel=1e-12)
            assert (method2 <= approx) == (prefactor <= pw)

    def test_method2_unstable(self, traffic_350k, link):
        """E[C] <= mu raises UnstableError."""
        with pytest.raises(UnstableError):
            delay_model.delay_ccdf_method2(_exponent(0.3, 700.0), traffic_350k, 1e-6, link, 0.01)


class TestQueueAndMeans:
    """Test suite for the queue tail and the mean delay and backlog."""

    def test_queue_tail(self, traffic_350k):
        """P(Q > B) = (1-x) exp(-u*B)."""
        u = _exponent(0.4, 700.0)
        assert delay_model.queue_ccdf(u, traffic_350k, 0.0) == pytest.approx(0.6)
        assert delay_model.queue_ccdf(u, traffic_350k, 1400.0) == pytest.approx(0.6 * np.exp(-0.8))
        assert delay_model.nonempty_buffer_prob(u, traffic_350k) == pytest.approx(0.6)

    def test_littles_law_identity(self, traffic_350k):
        """E[D]*mu = p_b/u* = E[Q]."""
        for x in [0.01, 0.2, 0.5, 0.9, 0.999]:
            u = _exponent(x, 700.0)
            expected = (1.0 - x) / u.u_star
            assert delay_model.mean_delay(u, traffic_350k) * traffic_350k.mu == pytest.approx(expected, rel=1e-12)
            assert delay_model.mean_queue_bits(u, traffic_350k) == pytest.approx(expected, rel=1e-12)

    def test_mean_delay_vanishes_near_full_exponent(self, traffic_350k):
        """p_w -> 0 as u*Lbar -> 1, and so does the mean delay."""
        near = delay_model.mean_delay(_exponent(0.999999, 700.0), traffic_350k)
        assert 0.0 < near < 1e-6

    def test_mean_delay_requires_positive_exponent(self, traffic_350k):
        """u* = 0 makes the mean delay diverge."""
        with pytest.raises(DomainError):
            delay_model.mean_delay(QoSExponent(0.0), traffic_350k)
        with pytest.raises(DomainError):
            delay_model.mean_queue_bits(QoSExponent(0.0), traffic_350k)


class TestDelayCcdf:
    """Test suite for the DelayCcdf record and build_ccdf."""

    def test_build_and_frame(self, traffic_350k):
        """Curves come out in the t_s,prob,method schema."""
        grid = [0.0, 0.001, 0.002, 0.003]
        curve = delay_model.build_ccdf(delay_model.PW_PREFACTOR, _exponent(0.3, 700.0), traffic_350k, grid)
        frame = curve.to_frame()
        assert list(frame.columns) == ["t_s", "prob", "method"]
        assert list(frame["t_s"]) == grid
        assert set(frame["method"]) == {"proposition1"}
        assert frame["prob"].is_monotonic_decreasing

    def test_method2_curve_needs_power(self, traffic_350k):
        """METHOD2 without Ptx and params is rejected."""
        with pytest.raises(DomainError):
            delay_model.build_ccdf(delay_model.METHOD2, _exponent(0.3, 700.0), traffic_350k, [0.0, 0.001])

    def test_empirical_is_not_analytic(self, traffic_350k):
        """build_ccdf does not produce empirical curves."""
        with pytest.raises(DomainError):
            delay_model.build_ccdf(delay_model.EMPIRICAL, _exponent(0.3, 700.0), traffic_350k, [0.0])

    def test_unsorted_grid_rejected(self, traffic_350k):
        """Grids must be strictly increasing."""
        with pytest.raises(DomainError):
            delay_model.build_ccdf(delay_model.METHOD1, _exponent(0.3, 700.0), traffic_350k, [0.002, 0.001])

    @pytest.mark.parametrize("points, method", [
        (((0.0, 0.5), (0.001, 0.6)), "empirical"),
        (((0.0, 1.5),), "empirical"),
        (((0.0, 0.5),), "unknown"),
    ])
    def test_invalid_curves(self, points, method):
        """Increasing, out-of-range or unlabeled curves raise DomainError."""
        with pytest.raises(DomainError):
            delay_model.DelayCcdf(points=points, method=method)

    def test_frames_concatenate(self, traffic_350k):
        """Curves of several methods stack into one long table."""
        u = _exponent(0.3, 700.0)
        grid = [0.0, 0.001]
        frames = [delay_model.build_ccdf(method, u, traffic_350k, grid).to_frame()
                  for method in (delay_model.PW_PREFACTOR, delay_model.METHOD1)]
        table = pd.concat(frames, ignore_index=True)
        assert len(table) == 4
        assert list(table["method"]) == ["proposition1"] * 2 + ["method1_pw_one"] * 2
