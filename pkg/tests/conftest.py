import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def random_interior_simplex(rng, size, q=4, floor=0.01):
    """Uniform-ish simplex points with every coordinate >= floor."""
    raw = rng.dirichlet(np.ones(q), size=size)
    return floor + (1 - q * floor) * raw


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
