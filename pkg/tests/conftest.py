import math

import numpy as np
import pytest

from miura.cases import hyperboloid_case
from miura.pipeline import solve_case, solver_config


@pytest.fixture(scope="session")
def coarse_hyperboloid():
    case = hyperboloid_case(nx=2, ny=12)
    return solve_case(case, solver_config(case))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quarter_turn():
    return math.pi / 2
