import sys
import os

import pytest

# Add project root to Python path for all tests
# This file is automatically loaded by pytest before running any tests
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from modules import params


@pytest.fixture
def link():
    """Reference link: 1 ms slots, 180 kHz, m=2, 10 dB, 1 km."""
    return params.reference_params()


@pytest.fixture
def traffic_350k():
    """350 kbit/s source, p=0.5 and Lbar=700 bits."""
    return params.TrafficModel(p=0.5, Lbar=700.0, Ts=1e-3)


@pytest.fixture
def traffic_internet():
    """Internet-sized packets, p=0.5 and Lbar=1488 bits."""
    return params.TrafficModel(p=0.5, Lbar=1488.0, Ts=1e-3)


@pytest.fixture
def qos_10ms():
    """P(D > 10 ms) <= 0.01."""
    return params.QoSTarget(Dmax=0.01, eps=0.01, Ts=1e-3)
