import numpy as np
import pytest

from hcboson import wannier


@pytest.fixture(scope="session")
def default_frame():
    """Default-window frame (25 cells); leak gate at the achievable level."""
    return wannier.build_frame(leak_tol=0.15)


@pytest.fixture(scope="session")
def small_frame():
    """W = 1 frame (9 cells) used for joint-entropy work on larger lattices."""
    return wannier.build_frame(wx=1, wk=1, leak_tol=0.3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
