import numpy as np
import pytest

from minicar.params import reference_params


@pytest.fixture(scope="session")
def ref():
    """Reference parameter set used as ground truth throughout."""
    return reference_params()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
