import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tvmultibang.kernels import MultibangLevels
from tvmultibang.mesh import build_rect_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_square_1():
    return build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1)


@pytest.fixture
def square_mesh_8():
    return build_rect_mesh(-1.0, 1.0, -1.0, 1.0, 8, 8)


@pytest.fixture
def levels_012():
    return MultibangLevels((0.0, 1.0, 2.0), shift=1.5)


@pytest.fixture
def levels_ex1():
    return MultibangLevels((0.0, 0.25, 0.5, 0.75, 1.0), shift=1.5)
