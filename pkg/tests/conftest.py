import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from coarsedim import FiniteMetricSpace


def interval_space(n: int, validate="basic") -> FiniteMetricSpace:
    """The integer interval {0..n-1} with |x - y|."""
    return FiniteMetricSpace(
        range(n), lambda x, y: Fraction(abs(x - y)), validate=validate
    )


def cyclic_space(k: int, points=None) -> FiniteMetricSpace:
    """Z_k with the cyclic word metric on the given representatives."""
    pts = list(points) if points is not None else list(range(k))

    def dist(x, y):
        d = (x - y) % k
        return Fraction(min(d, k - d))

    return FiniteMetricSpace(pts, dist)


@pytest.fixture
def z7_centered():
    return cyclic_space(7, points=range(-3, 4))
