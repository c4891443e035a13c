import math

import numpy as np
import pytest

from dpfedsim.analysis import (
    BoundInputs,
    TheoremViolation,
    bound_report,
    c_hat_threshold,
    empirical_lhs_clip,
    estimate_assumption_lambda,
    proposition1_chat,
    theorem2_bound,
    theorem3_bound,
    theorem4_bound,
    theorem_mode_schedule,
)
from dpfedsim.fedopt import DP_CLIP, DP_NORM, RunConfig, ScheduleSpec, SensitivityPolicy, init_point, run_federated
from dpfedsim.objectives import generate_quadratic_suite
from dpfedsim.privacy import PrivacyBudget
from dpfedsim.streams import StreamKey

# Frozen regression for the reference suite: C_hat = 4 sqrt(L max Delta*), E = 4,
# rho at n=100, d=200, eps=5, delta=1e-6, D = ||I1(seed 0) - w*||.
REFERENCE_THEOREM3 = 23.308140591092876


def simple(**kw):
    base = dict(L=1.0, rho=0.1, C_hat=1.0, E=1, init_distance=1.0, heterogeneity=np.zeros(3))
    base.update(kw)
    return BoundInputs(**base)


def test_term_a_example():
    a, b, rhs = theorem2_bound(simple())
    assert a == pytest.approx(0.2, rel=1e-15)
    assert b == 0.0 and rhs == a


def test_term_b_uses_mean_heterogeneity():
    inp = simple(heterogeneity=np.array([0.01, 0.03]), C_hat=1.0, E=2)
    _, b, _ = theorem2_bound(inp)
    assert b == pytest.approx(3 * 2 / 2 * 0.02 * 0.1, rel=1e-14)


def test_theorem3_examples():
    assert theorem3_bound(simple()) == pytest.approx(0.2, rel=1e-15)
    assert theorem3_bound(simple(rho=0.0)) == 0.0
    assert theorem3_bound(simple(heterogeneity=np.array([2.0]), E=3)) == \
        pytest.approx((2 + 1.2 * 3 * 2.0) * 0.1, rel=1e-15)


def test_theorem4_vanishing_terms():
    norms = np.full((5, 3), 2.0)
    _, het, _ = theorem4_bound(simple(C_hat=1e-8), norms)
    assert het < 1e-15


def test_theorem4_boundary_factor_one():
    inp = simple(C_hat=2.0, E=2, heterogeneity=np.array([0.1]), rho=0.2)
    norms = np.array([[4.0]])  # ||u|| = C_hat E exactly
    _, het, _ = theorem4_bound(inp, norms)
    expect = (2.0**2 / 2 + 1.0 * 0.1 * 0.2 * 2) * 2 * 0.2
    assert het == pytest.approx(expect, rel=1e-14)
    # above the threshold the factor is clamped to 1, below it grows as C_hat E / ||u||
    _, het_big, _ = theorem4_bound(inp, np.array([[40.0]]))
    assert het_big == pytest.approx(expect, rel=1e-14)
    _, het_small, _ = theorem4_bound(inp, np.array([[2.0]]))
    assert het_small == pytest.approx((2.0 + 2.0 * 0.1 * 0.2 * 2) * 2 * 0.2, rel=1e-14)


def test_theorems_share_term_a():
    inp = simple(heterogeneity=np.array([0.01, 0.02]), C_hat=2.0, E=3, rho=0.15, gamma=0.7)
    assert theorem2_bound(inp)[0] == theorem4_bound(inp, np.ones((2, 2)))[0]


def test_theorem4_needs_full_participation():
    with pytest.raises(ValueError, match="full participation"):
        theorem4_bound(simple(), np.array([[1.0, np.nan, 1.0]]))


@pytest.mark.parametrize("kw,match", [
    (dict(heterogeneity=np.array([1.0]), C_hat=3.9), "C_hat"),
    (dict(E=6), "E ="),
    (dict(alpha=0.5), "alpha"),
    (dict(rho=1.0), "rho"),
    (dict(gamma=0.0), "gamma"),
])
def test_theorem_violations(kw, match):
    with pytest.raises(TheoremViolation, match=match):
        theorem2_bound(simple(**kw))


def test_threshold_is_admissible():
    het = np.array([0.3, 2.0])
    need = c_hat_threshold(1.5, het)
    assert need == pytest.approx(4 * math.sqrt(3.0), rel=1e-15)
    theorem2_bound(simple(L=1.5, heterogeneity=het, C_hat=need))


def test_theorem_mode_schedule():
    eta, K = theorem_mode_schedule(L=1.0, rho=0.01, C_hat=2.0, E=5, alpha=1.0, gamma=1.0)
    assert eta == pytest.approx(0.005, rel=1e-15)
    assert K == math.ceil(2 / (2 * 5 * 1e-4))


def test_proposition1_examples():
    assert proposition1_chat(3.0, 1, 0.1, 0.5, 1.0) == 3.0
    assert proposition1_chat(1.0, 2, 0.1, 1.0, 1.0) == pytest.approx(0.9828125, rel=1e-15)
    vals = [proposition1_chat(1.0, E, 0.1, 1.0, 1.0) for E in range(1, 6)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        proposition1_chat(1.0, 6, 0.1, 1.0, 1.0)
    with pytest.raises(ValueError):
        proposition1_chat(1.0, 2, 0.1, 2.0, 1.0)


def test_reference_theorem3_regression(reference_suite):
    rho = PrivacyBudget(5.0, 1e-6, 100, 200).rho
    init = init_point("I1", reference_suite, StreamKey(0))
    het = reference_suite.heterogeneity
    inp = BoundInputs(reference_suite.smoothness_bound, rho, c_hat_threshold(reference_suite.smoothness_bound, het),
                      4, float(np.linalg.norm(init - reference_suite.global_optimum)), het)
    assert theorem3_bound(inp) == pytest.approx(REFERENCE_THEOREM3, rel=1e-9)


def test_lambda_estimate_is_descriptive(reference_suite):
    lam = estimate_assumption_lambda(reference_suite, StreamKey(0), samples_per_client=1)
    assert 0 < lam <= reference_suite.smoothness_bound


@pytest.mark.parametrize("algorithm", [DP_CLIP, DP_NORM])
def test_bound_holds_on_small_theorem_mode_run(algorithm):
    suite = generate_quadratic_suite(StreamKey(1), n=60, d=4, factor_rank=2, factor_std=0.5)
    from dpfedsim.objectives import heterogeneity_profile, solve_global_optimum

    w_star = solve_global_optimum(suite)
    het = heterogeneity_profile(suite, w_star)
    budget = PrivacyBudget(5.0, 1e-6, suite.n, suite.dimension)
    L, rho = suite.smoothness_bound, budget.rho
    c_hat = c_hat_threshold(L, het)
    init = init_point("I1", suite, StreamKey(2))
    D = float(np.linalg.norm(init - w_star))
    inputs = BoundInputs(L, rho, c_hat, 2, D, het, 1.0, L * D)
    eta, K = theorem_mode_schedule(L, rho, c_hat, 2, 1.0, L * D)
    make = SensitivityPolicy.clip if algorithm == DP_CLIP else SensitivityPolicy.normalize
    cfg = RunConfig(algorithm, suite, K, 2, float(suite.n), ScheduleSpec(eta, constant_override=eta),
                    init, 2, make(c_hat * 2), budget)
    trace = run_federated(cfg)
    report = bound_report(algorithm, suite, trace, w_star, inputs).to_dict()
    assert report["holds"] and report["margin"] > 0
    assert report["term_a"] + report["term_b"] == pytest.approx(report["rhs"])
    with pytest.raises(ValueError):
        empirical_lhs_clip(suite, trace.iterates, np.full((K, suite.n), np.nan), w_star, inputs)
