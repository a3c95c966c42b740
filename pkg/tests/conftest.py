import numpy as np
import pytest

from kneadlab import make_logistic, make_quadratic, make_sine
from kneadlab.measure import screened_parameters

SCREEN_SEED = 777


@pytest.fixture(scope="session")
def q2():
    return make_quadratic(2.0)


@pytest.fixture(scope="session")
def q19():
    return make_quadratic(1.9)


@pytest.fixture(scope="session")
def screened_taus():
    """20 stochasticity-screened parameters in (1.75, 2), seeded."""
    return screened_parameters(make_quadratic, 1.75, 2.0, 20, SCREEN_SEED)
