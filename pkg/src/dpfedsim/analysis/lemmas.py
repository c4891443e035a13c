"""Numerical checks of the local-descent inequalities used in the convergence proofs.

Each check walks an explicit local gradient-descent trajectory and compares
both sides of the inequality with slack ``slack * max(1, |lhs|, |rhs|)``.

    descent    ||w_E - w*||^2 <= ||w_0 - w*||^2 - eta/(2L) sum ||g_tau||^2 + 2 eta E Delta_i*
               (needs eta <= 1/(2L))
    update     ||u||^2 <= 2 L E^2 (f_i(w_0) - f_i*)                  (needs eta <= 1/L)
    monotone   ||g_{tau+1}||^2 <= ||g_tau||^2 - (2/(eta L) - 1) ||g_{tau+1} - g_tau||^2
    drift      ||w_0 - w_tau|| <= 2 eta tau ||g_0||                   (needs eta <= 1/(2 L E))
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEMMAS = ("descent", "update", "monotone", "drift")


@dataclass(frozen=True)
class Violation:
    lemma: str
    round: int
    client: int
    step: int
    lhs: float
    rhs: float


@dataclass
class LemmaReport:
    checked: dict[str, int] = field(default_factory=lambda: dict.fromkeys(LEMMAS, 0))
    skipped: dict[str, str] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checked": dict(self.checked),
            "skipped": dict(self.skipped),
            "violations": [v.__dict__ for v in self.violations],
        }


def fact1_check(value_gap: float, grad_norm_sq: float, L: float, slack: float = 1e-12) -> bool:
    """||grad h(x)||^2 <= 2 L (h(x) - h*)."""
    rhs = 2 * L * value_gap
    return grad_norm_sq <= rhs + slack * max(1.0, abs(rhs))


def fact3_check(x: float, m: int) -> bool:
    """(1 - (1-x)^m) / x <= m (1 - 11 (m-1) x / 24) for x in (0,1), m x <= 1/4."""
    if not 0 < x < 1:
        raise ValueError(f"x must lie in (0, 1), got {x}")
    if m < 1 or m * x > 0.25:
        raise ValueError(f"need m >= 1 and m x <= 1/4, got m={m}, x={x}")
    lhs = -np.expm1(m * np.log1p(-x)) / x
    rhs = m * (1 - 11 * (m - 1) * x / 24)
    # m = 1 is an identity; allow one rounding ulp on each side.
    return bool(lhs <= rhs * (1 + 4 * np.finfo(float).eps))


def fact3_grid(x_step: float = 1e-3, m_max: int = 250) -> tuple[int, list[tuple[float, int]]]:
    """Check every grid point x = j * x_step < 1, m <= m_max with m x <= 1/4."""
    failures = []
    count = 0
    j = 1
    while True:
        x = j * x_step
        if x > 0.25:
            break
        for m in range(1, min(m_max, int(0.25 / x + 1e-9)) + 1):
            if m * x > 0.25:
                break
            count += 1
            if not fact3_check(x, m):
                failures.append((x, m))
        j += 1
    return count, failures


def _ok(lhs: float, rhs: float, slack: float) -> bool:
    return lhs <= rhs + slack * max(1.0, abs(lhs), abs(rhs))


def check_local_trajectory(client, w_start: np.ndarray, eta: float, E: int, L: float,
                           w_star: np.ndarray, delta_star: float, report: LemmaReport,
                           round_index: int = 0, client_id: int = 0, slack: float = 1e-9) -> None:
    """Run E local steps from ``w_start`` and test every applicable inequality."""
    f_min = client.local_minimum()
    ws = [np.array(w_start, dtype=float)]
    gs = []
    for _ in range(E):
        g = client.value_grad(ws[-1])[1]
        gs.append(g)
        ws.append(ws[-1] - eta * g)
    gs.append(client.value_grad(ws[-1])[1])
    gsq = np.array([float(g @ g) for g in gs])

    def note(lemma, step, lhs, rhs):
        report.checked[lemma] += 1
        if not _ok(lhs, rhs, slack):
            report.violations.append(Violation(lemma, round_index, client_id, step, lhs, rhs))

    if eta <= 1 / (2 * L):
        lhs = float(np.sum((ws[-1] - w_star) ** 2))
        rhs = (float(np.sum((ws[0] - w_star) ** 2)) - eta / (2 * L) * float(gsq[:E].sum())
               + 2 * eta * E * delta_star)
        note("descent", E, lhs, rhs)
    else:
        report.skipped["descent"] = f"eta={eta:.3g} > 1/(2L)"

    if eta <= 1 / L:
        u = np.sum(gs[:E], axis=0)
        note("update", E, float(u @ u), 2 * L * E**2 * (client.value(ws[0]) - f_min))
    else:
        report.skipped["update"] = f"eta={eta:.3g} > 1/L"

    for tau in range(E):
        diff = gs[tau + 1] - gs[tau]
        rhs = gsq[tau] - (2 / (eta * L) - 1) * float(diff @ diff)
        note("monotone", tau, float(gsq[tau + 1]), rhs)

    if eta <= 1 / (2 * L * E):
        g0 = np.sqrt(gsq[0])
        for tau in range(1, E + 1):
            note("drift", tau, float(np.linalg.norm(ws[0] - ws[tau])), 2 * eta * tau * g0)
    else:
        report.skipped["drift"] = f"eta={eta:.3g} > 1/(2LE)"


def lemma_suite(suite, samples, eta: float, E: int, w_star: np.ndarray | None = None,
                heterogeneity: np.ndarray | None = None, slack: float = 1e-9,
                L: float | None = None) -> LemmaReport:
    """Check all four inequalities along local trajectories.

    ``samples`` yields (round, client, w_k) triples, the starting points of
    the local runs to examine.
    """
    if w_star is None:
        w_star = suite.global_optimum
    if heterogeneity is None:
        heterogeneity = suite.heterogeneity
    if w_star is None or heterogeneity is None:
        raise ValueError("lemma_suite needs the global optimum and heterogeneity profile")
    L = suite.smoothness_bound if L is None else L
    report = LemmaReport()
    for k, i, w_k in samples:
        check_local_trajectory(suite.clients[i], w_k, eta, E, L, w_star, float(heterogeneity[i]),
                               report, k, i, slack)
    return report


def sample_trajectory_starts(trace, n_clients: int, key, count: int = 100):
    """``count`` random (round, client, w_k) triples drawn from a run's stored iterates."""
    if trace.iterates is None:
        raise ValueError("trace has no stored iterates")
    gen = key.generator()
    rounds = gen.integers(0, trace.iterates.shape[0] - 1, size=count)
    clients = gen.integers(0, n_clients, size=count)
    return [(int(k), int(i), trace.iterates[k]) for k, i in zip(rounds, clients)]
