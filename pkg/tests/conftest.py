import os
import sys

import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from optics import OpticalConfig, SourceConfig, rayleigh_radius  # noqa: E402


@pytest.fixture
def cfg():
    """Caption geometry: k = 6000, R = 1, D_o = 250, m = 1 (somb argument scale 24)."""
    return OpticalConfig()


@pytest.fixture
def src():
    return SourceConfig()


@pytest.fixture
def x_r(cfg):
    return rayleigh_radius(cfg)
