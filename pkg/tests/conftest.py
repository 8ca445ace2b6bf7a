import numpy as np
import pytest

from ellipvol.linalg import Spectrum
from ellipvol.sampling import RandomStream


@pytest.fixture
def stream():
    return RandomStream(12345, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_spectrum(n, rng, lo=0.5, hi=2.0):
    return Spectrum.from_values(rng.uniform(lo, hi, n), normalize=True)
