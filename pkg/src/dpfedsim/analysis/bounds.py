"""Closed-form convergence-bound terms and their empirical left-hand sides.

The right-hand sides are analytic; the left-hand sides are indicator-weighted
expectations over a uniformly drawn round, evaluated here along an actual run
trace (every round weighted 1/K), which needs per-client update norms for
every round, i.e. full participation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


class TheoremViolation(ValueError):
    """Raised when the parameters fall outside a theorem's hypotheses."""


@dataclass
class BoundInputs:
    L: float
    rho: float
    C_hat: float
    E: int
    init_distance: float
    heterogeneity: np.ndarray
    alpha: float = 1.0
    gamma: float = 1.0
    K: int | None = None
    G: float | None = None
    lam: float | None = None

    def __post_init__(self):
        self.heterogeneity = np.asarray(self.heterogeneity, dtype=float)


def c_hat_threshold(L: float, heterogeneity) -> float:
    """Smallest admissible per-step scale: 4 sqrt(L max Delta_i*)."""
    return 4.0 * math.sqrt(L * float(np.max(heterogeneity)))


def check_theorem_mode(inputs: BoundInputs) -> None:
    if inputs.alpha < 1:
        raise TheoremViolation(f"alpha must be >= 1, got {inputs.alpha}")
    if inputs.gamma <= 0:
        raise TheoremViolation(f"gamma must be > 0, got {inputs.gamma}")
    if not 0 < inputs.rho < 1:
        raise TheoremViolation(f"rho must lie in (0, 1), got {inputs.rho}")
    if np.any(inputs.heterogeneity < 0):
        raise TheoremViolation("heterogeneity values must be nonnegative")
    need = c_hat_threshold(inputs.L, inputs.heterogeneity)
    # relative slack so the threshold value itself is admissible
    if inputs.C_hat < need * (1 - 1e-12):
        raise TheoremViolation(f"C_hat = {inputs.C_hat:.6g} is below 4 sqrt(L max Delta*) = {need:.6g}")
    if inputs.E > inputs.alpha / (2 * inputs.rho):
        raise TheoremViolation(
            f"E = {inputs.E} exceeds alpha / (2 rho) = {inputs.alpha / (2 * inputs.rho):.6g}")


def theorem_mode_schedule(L: float, rho: float, C_hat: float, E: int, alpha: float = 1.0,
                          gamma: float = 1.0) -> tuple[float, int]:
    """Constant rate eta = rho / (2 alpha L) and K = ceil(2 alpha gamma / (C_hat E rho^2))."""
    eta = rho / (2 * alpha * L)
    K = max(1, math.ceil(2 * alpha * gamma / (C_hat * E * rho**2)))
    return eta, K


def initialization_term(inputs: BoundInputs) -> float:
    D2 = inputs.init_distance**2
    return inputs.C_hat * (inputs.L * D2 / inputs.gamma + inputs.gamma / inputs.L) * inputs.rho


def theorem2_bound(inputs: BoundInputs) -> tuple[float, float, float]:
    """(A, B, A + B) for clipped DP-FedAvg.

    B uses the unconditional mean of Delta_i*, which upper-bounds the
    indicator-weighted mean in the exact statement.
    """
    check_theorem_mode(inputs)
    term_a = initialization_term(inputs)
    term_b = (3 * inputs.E / (2 * inputs.alpha)) * float(np.mean(inputs.heterogeneity)) * inputs.rho
    return term_a, term_b, term_a + term_b


def theorem3_bound(inputs: BoundInputs) -> float:
    """Reporting-only simplified bound (2 C_hat D + (6/5) E mean Delta*) rho."""
    return (2.0 * inputs.C_hat * inputs.init_distance
            + 1.2 * inputs.E * float(np.mean(inputs.heterogeneity))) * inputs.rho


def theorem4_bound(inputs: BoundInputs, update_norms: np.ndarray) -> tuple[float, float, float]:
    """(A, heterogeneity term, rhs) for DP-NormFedAvg along a trace.

    ``update_norms`` is (K, n).  The heterogeneity term averages, over rounds
    and clients, [C_hat^2/(2 alpha L) + max(1, C_hat E/||u||) Delta_i* rho E/alpha^2] E rho.
    """
    check_theorem_mode(inputs)
    norms = _full_norms(update_norms)
    a, L, E, rho, ch = inputs.alpha, inputs.L, inputs.E, inputs.rho, inputs.C_hat
    with np.errstate(divide="ignore"):
        ratio = np.where(norms > 0, ch * E / norms, np.inf)
    factor = np.maximum(ratio, 1.0)
    het = inputs.heterogeneity[None, :]
    inner = ch**2 / (2 * a * L) + np.where(het > 0, factor * het, 0.0) * rho * E / a**2
    het_term = float(np.mean(inner)) * E * rho
    term_a = initialization_term(inputs)
    return term_a, het_term, term_a + het_term


def _full_norms(update_norms: np.ndarray) -> np.ndarray:
    norms = np.asarray(update_norms, dtype=float)
    if norms.ndim != 2 or np.isnan(norms).any():
        raise ValueError("bound evaluation needs every client's update norm in every round "
                         "(run with full participation)")
    return norms


def _client_gaps(suite, iterates: np.ndarray, w_star: np.ndarray) -> np.ndarray:
    at_star = suite.client_values(w_star)
    return np.stack([suite.client_values(w) - at_star for w in iterates])


def empirical_lhs_clip(suite, iterates: np.ndarray, update_norms: np.ndarray, w_star: np.ndarray,
                       inputs: BoundInputs) -> float:
    """Trace average of the clipped-algorithm left-hand side (rounds 0..K-1)."""
    norms = _full_norms(update_norms)
    gaps = _client_gaps(suite, iterates[: norms.shape[0]], w_star)
    a, L, E, rho, ch = inputs.alpha, inputs.L, inputs.E, inputs.rho, inputs.C_hat
    inside = norms <= ch * E
    coef = 2 - rho * E / a - (rho * E / a) ** 2
    per = np.where(inside, coef * gaps, 3 * ch / (8 * L * E) * norms)
    return float(np.mean(per))


def empirical_lhs_norm(suite, iterates: np.ndarray, update_norms: np.ndarray, w_star: np.ndarray,
                       inputs: BoundInputs) -> float:
    """Trace average of the normalized-algorithm left-hand side (rounds 0..K-1)."""
    norms = _full_norms(update_norms)
    gaps = _client_gaps(suite, iterates[: norms.shape[0]], w_star)
    a, L, E, rho, ch = inputs.alpha, inputs.L, inputs.E, inputs.rho, inputs.C_hat
    inside = norms <= ch * E
    coef = 2 - (rho * E / a) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        amplified = coef * (ch * E / norms) * gaps
    per = np.where(inside, amplified, 3 * ch * norms / (8 * L * E))
    return float(np.mean(per))


def proposition1_chat(G: float, E: int, rho: float, lam: float, L: float) -> float:
    """Per-step scale G (1 - 11 (E-1) rho lam^2 / (64 L^2)) under which no clipping occurs."""
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    if not 0 < lam <= L:
        raise ValueError(f"need 0 < lambda <= L, got lambda={lam}, L={L}")
    if E < 1 or E > 1 / (2 * rho):
        raise ValueError(f"E must lie in [1, 1/(2 rho)] = [1, {1 / (2 * rho):.6g}], got {E}")
    return G * (1 - 11 * (E - 1) * rho * lam**2 / (64 * L**2))


def estimate_assumption_lambda(suite, key, samples_per_client: int = 5) -> float:
    """Min over clients and random points of ||Q_i g|| / ||g|| with g = grad f_i(w).

    Quadratic suites only; a descriptive estimate, never asserted.
    """
    from dpfedsim.streams import standard_normals

    if not suite.is_quadratic:
        raise ValueError("lambda estimation is implemented for quadratic suites")
    best = math.inf
    for i, client in enumerate(suite.clients):
        pts = standard_normals(key.child("lambda", i), samples_per_client * suite.dimension)
        for w in pts.reshape(samples_per_client, suite.dimension):
            g = client.value_grad(w)[1]
            gn = np.linalg.norm(g)
            if gn > 0:
                best = min(best, float(np.linalg.norm(client.hessian_apply(g)) / gn))
    return best


@dataclass
class BoundReport:
    algorithm: str
    inputs: dict
    term_a: float
    term_b: float
    rhs: float
    lhs: float
    theorem3: float
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        out = asdict(self)
        out["margin"] = self.margin
        out["holds"] = bool(self.lhs <= self.rhs)
        return out


def bound_report(algorithm: str, suite, trace, w_star: np.ndarray, inputs: BoundInputs) -> BoundReport:
    """Analytic RHS and trace-evaluated LHS for one theorem-mode run."""
    from dpfedsim.fedopt.engine import DP_NORM

    if trace.iterates is None:
        raise ValueError("bound reports need stored iterates")
    if algorithm == DP_NORM:
        a, b, rhs = theorem4_bound(inputs, trace.update_norms)
        lhs = empirical_lhs_norm(suite, trace.iterates, trace.update_norms, w_star, inputs)
    else:
        a, b, rhs = theorem2_bound(inputs)
        lhs = empirical_lhs_clip(suite, trace.iterates, trace.update_norms, w_star, inputs)
    plain = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(inputs).items()}
    plain["heterogeneity_max"] = float(np.max(inputs.heterogeneity))
    plain["heterogeneity_mean"] = float(np.mean(inputs.heterogeneity))
    del plain["heterogeneity"]
    return BoundReport(algorithm, plain, a, b, rhs, lhs, theorem3_bound(inputs))
