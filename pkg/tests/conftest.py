import numpy as np
import pytest

from adeform.kernels import DeformParams, PolarPoint

# deformation contexts exercised throughout: integer and fractional a,
# the classical point a = 2, and dimensions from the plane upward
PARAM_PAIRS = [(1.0, 3), (2.0, 3), (2.0 / 3.0, 2), (3.0, 4)]


@pytest.fixture(params=PARAM_PAIRS, ids=lambda p: f"a{p[0]:.3g}N{p[1]}")
def params(request):
    return DeformParams(*request.param)


@pytest.fixture
def params13():
    return DeformParams(1.0, 3)


def unit_x(N, r=1.0):
    v = np.zeros(N)
    v[0] = r
    return PolarPoint.from_cartesian(v)
