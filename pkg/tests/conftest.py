import math

import numpy as np
import pytest


def random_coprime_pair(rng, lo=2, hi=200):
    """Cofactor pair (g1, g2) with 1 < g1 < g2 <= hi and gcd 1."""
    while True:
        g1 = int(rng.integers(lo, hi))
        g2 = int(rng.integers(g1 + 1, hi + 1))
        if math.gcd(g1, g2) == 1:
            return g1, g2


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
