import os
import sys

import numpy as np
import pytest
from hypothesis import settings

from kgsoliton.charge import ChargeProfile
from kgsoliton.fields import Grid
from kgsoliton.model import Model

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@pytest.fixture(scope="session")
def profile():
    return ChargeProfile()


@pytest.fixture(scope="session")
def model64(profile):
    return Model(Grid(64, 16.0), profile, 1.0)


@pytest.fixture(scope="session")
def model32(profile):
    return Model(Grid(32, 12.0), profile, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
