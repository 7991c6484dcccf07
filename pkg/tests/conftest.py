import numpy as np
import pytest

from octoval.spin import spin_context


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def ctx():
    return spin_context()
