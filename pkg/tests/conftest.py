import numpy as np
import pytest

from qnonlin import config


def rand_complex(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def rand_hermitian(rng, d):
    g = rand_complex(rng, d)
    return 0.5 * (g + g.conj().T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def default_tolerances():
    previous = config.set_tolerances(config.Tolerances())
    yield
    config.set_tolerances(previous)
