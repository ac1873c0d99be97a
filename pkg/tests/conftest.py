import numpy as np
import pytest

from hima.dnc import MemoryGeometry, zero_state
from hima.scriptgen import random_script, warmed_state


@pytest.fixture
def small_geometry():
    return MemoryGeometry(16, 4, 2)


@pytest.fixture
def small_state(small_geometry):
    return warmed_state(small_geometry, seed=11, steps=4)


@pytest.fixture
def small_script(small_geometry):
    return random_script(small_geometry, 8, seed=5)


def max_abs_diff(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
