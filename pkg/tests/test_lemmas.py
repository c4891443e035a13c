import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpfedsim.analysis.lemmas import (
    LemmaReport,
    check_local_trajectory,
    fact1_check,
    fact3_check,
    fact3_grid,
    lemma_suite,
)
from dpfedsim.objectives.suite import ProblemSuite

from conftest import scalar_quadratic


def run_hand(eta):
    client = scalar_quadratic(1.0, 0.0)
    report = LemmaReport()
    check_local_trajectory(client, np.array([1.0]), eta, 4, 1.0, np.array([0.0]), 0.0, report)
    return report


def test_hand_example_large_step():
    # f = w^2 / 2, eta = 1/4: w_t = 0.75^t and the monotone inequality is tight.
    report = run_hand(0.25)
    assert report.ok
    assert report.checked == {"descent": 1, "update": 1, "monotone": 4, "drift": 0}
    assert "drift" in report.skipped


def test_hand_example_small_step_checks_drift():
    report = run_hand(0.125)
    assert report.ok and report.checked["drift"] == 4 and not report.skipped


def test_violation_is_recorded_when_inequality_fails():
    # With an understated L the update bound 2 L E^2 (f - f*) is too small.
    client = scalar_quadratic(1.0, 0.0)
    report = LemmaReport()
    check_local_trajectory(client, np.array([1.0]), 0.1, 4, 0.01, np.array([0.0]), 0.0, report)
    assert not report.ok
    assert {v.lemma for v in report.violations} >= {"update"}


def test_homogeneous_suite():
    suite = ProblemSuite([scalar_quadratic(2.0, 1.0) for _ in range(3)])
    starts = [(0, i, np.array([1.0 + s])) for i, s in enumerate((-3.0, 0.5, 4.0))]
    report = lemma_suite(suite, starts, 1 / (2 * 2.0 * 5), 5, np.array([1.0]), np.zeros(3), L=2.0)
    assert report.ok and sum(report.checked.values()) == 3 * (1 + 1 + 5 + 5)


def test_lemma_suite_needs_optimum():
    suite = ProblemSuite([scalar_quadratic(1.0, 0.0)])
    with pytest.raises(ValueError):
        lemma_suite(suite, [], 0.1, 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(-3, 3), st.floats(-3, 3))
def test_fact1_on_scalar_quadratics(q, w_opt, w):
    client = scalar_quadratic(q, w_opt)
    val, g = client.value_grad(np.array([w]))
    assert fact1_check(val - client.local_minimum(), float(g @ g), client.smoothness())


def test_fact3_examples():
    assert fact3_check(0.2, 1)
    lhs = (1 - 0.9**2) / 0.1
    rhs = 2 * (1 - 11 * 0.1 / 24)
    assert lhs == pytest.approx(1.9) and rhs == pytest.approx(1.9083333333333334)
    assert fact3_check(0.1, 2)


def test_fact3_grid_has_no_violations():
    count, failures = fact3_grid()
    assert count > 1000 and failures == []


@pytest.mark.parametrize("x,m", [(0.0, 1), (1.0, 1), (0.2, 2), (0.1, 0)])
def test_fact3_preconditions(x, m):
    with pytest.raises(ValueError):
        fact3_check(x, m)
