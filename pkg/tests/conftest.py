import math

import pytest

from photonkd.core import random_stream
from photonkd.mub import default_table


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture
def rng():
    return random_stream(20240611)


@pytest.fixture
def sigma():
    """Binomial standard deviation of a frequency estimated from n trials."""

    def binomial_sigma(p: float, n: int) -> float:
        return math.sqrt(p * (1.0 - p) / n)

    return binomial_sigma
