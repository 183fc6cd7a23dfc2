"""
Shared fixtures for the test suite

Full-size statistical checks are marked slow and only run with --runslow.
"""

import sys
from pathlib import Path

import matplotlib
matplotlib.use('Agg')

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from core.estimation import ClickRecord, get_pom
from core.wishart import RandomStream


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run slow full-size regressions')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: full-size regression, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def stream():
    return RandomStream(12345, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def tetrahedron():
    return get_pom('tetrahedron')


@pytest.fixture
def trine():
    return get_pom('trine')


@pytest.fixture
def crosshair_real():
    return get_pom('crosshair-real')


@pytest.fixture
def crosshair_clicks():
    """Interior crosshair-real data: MLE at x = 0.2, z = 0.4."""
    return ClickRecord((12, 8, 14, 6))


@pytest.fixture
def trine_clicks():
    return ClickRecord((7, 10, 13))
