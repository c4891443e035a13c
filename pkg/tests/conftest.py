import numpy as np
import pytest

from dpfedsim.objectives import (
    QuadraticClient,
    generate_quadratic_suite,
    heterogeneity_profile,
    solve_global_optimum,
)
from dpfedsim.objectives.suite import ProblemSuite
from dpfedsim.streams import StreamKey


@pytest.fixture(scope="session")
def reference_suite():
    """The 100-client, 200-dimensional quadratic suite with w* and Delta* solved."""
    suite = generate_quadratic_suite(StreamKey(0).child("suite"))
    w_star = solve_global_optimum(suite)
    heterogeneity_profile(suite, w_star)
    return suite


def scalar_quadratic(q: float, w_opt: float) -> QuadraticClient:
    """1-D client 0.5 q (w - w_opt)^2."""
    return QuadraticClient(np.array([[np.sqrt(q)]]), np.array([w_opt]))


@pytest.fixture
def two_scalar_suite():
    return ProblemSuite([scalar_quadratic(1.0, 0.0), scalar_quadratic(3.0, -2.0)])
