"""One federated engine for FedAvg, DP-FedAvg (clipping) and DP-NormFedAvg.

The three algorithms differ only in the sensitivity policy applied to each
client update and in whether Gaussian noise is added.  Every random draw comes
from a named stream under the run's master seed:

    ("cohort", k)  client sampling in round k
    ("noise", k)   per-client noise block in round k (row i -> client i)
    ("init", 0)    the uniform offset of the I1/I2 initializations
    ("output", 0)  the round index of the privatized output

Two runs with the same master seed therefore see the same cohorts and, at the
same noise scale, the same noise vectors, whatever their policy.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from dpfedsim.analysis.metrics import RoundRecord, snr
from dpfedsim.fedopt.operators import CLIP, NONE, NORMALIZE, SensitivityPolicy
from dpfedsim.fedopt.schedule import ScheduleSpec, learning_rate
from dpfedsim.objectives.suite import ProblemSuite, solve_global_optimum
from dpfedsim.privacy import (
    NON_PRIVATE,
    NoiseScale,
    PrivacyBudget,
    calibrate_noise_variance,
    gaussian_block,
    key_quantity_rho,
)
from dpfedsim.streams import StreamKey, uniforms

log = logging.getLogger(__name__)

FEDAVG = "FedAvg"
DP_CLIP = "DPFedAvgClip"
DP_NORM = "DPNormFedAvg"
ALGORITHMS = (FEDAVG, DP_CLIP, DP_NORM)
_POLICY_FOR = {FEDAVG: NONE, DP_CLIP: CLIP, DP_NORM: NORMALIZE}


class RunConfigError(ValueError):
    pass


class DivergedRunError(RuntimeError):
    def __init__(self, round_index: int, client: int, step: int):
        super().__init__(
            f"diverged run: non-finite gradient at round {round_index}, client {client}, "
            f"local step {step}")
        self.round_index = round_index
        self.client = client
        self.step = step


@dataclass
class RunConfig:
    algorithm: str
    suite: ProblemSuite
    rounds: int
    local_steps: int
    cohort_rate: float
    schedule: ScheduleSpec
    init: np.ndarray
    master_seed: int
    policy: SensitivityPolicy = field(default_factory=SensitivityPolicy)
    budget: PrivacyBudget | None = None
    average_by_actual: bool = False
    keep_iterates: bool = True

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise RunConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        want = _POLICY_FOR[self.algorithm]
        if self.policy.kind != want:
            raise RunConfigError(
                f"{self.algorithm} requires policy {want!r}, got {self.policy.kind!r}")
        if self.algorithm == FEDAVG:
            if self.budget is not None:
                raise RunConfigError("FedAvg is non-private and takes no privacy budget")
        else:
            if self.budget is None:
                raise RunConfigError(f"{self.algorithm} requires a privacy budget")
            key_quantity_rho(self.budget)
            if self.budget.n_clients != self.suite.n or self.budget.dimension != self.suite.dimension:
                raise RunConfigError("privacy budget (n, d) must match the suite")
        if self.rounds < 1:
            raise RunConfigError(f"rounds K must be >= 1, got {self.rounds}")
        if self.local_steps < 1:
            raise RunConfigError(f"local steps E must be >= 1, got {self.local_steps}")
        if not 1 <= self.cohort_rate <= self.suite.n:
            raise RunConfigError(f"cohort rate r must lie in [1, n={self.suite.n}], "
                                 f"got {self.cohort_rate}")
        if np.shape(self.init) != (self.suite.dimension,):
            raise RunConfigError(f"init has shape {np.shape(self.init)}, "
                                 f"expected ({self.suite.dimension},)")

    def noise_scale(self) -> NoiseScale:
        if self.algorithm == FEDAVG:
            return NON_PRIVATE
        return calibrate_noise_variance(self.budget, self.rounds, self.policy.scale,
                                        self.cohort_rate)


@dataclass
class IterateTrace:
    records: list[RoundRecord]
    final: np.ndarray
    priv_index: int
    w_priv: np.ndarray
    noise: NoiseScale
    iterates: np.ndarray | None = None  # (K + 1, d): w_0 .. w_K
    update_norms: np.ndarray | None = None  # (K, n): ||u_k^(i)||, NaN when not sampled

    def summary(self) -> dict:
        last = self.records[-1]
        return {
            "rounds": len(self.records),
            "final_suboptimality": last.suboptimality,
            "mean_suboptimality": float(np.mean([r.suboptimality for r in self.records])),
            "priv_index": self.priv_index,
            "sigma_squared": self.noise.sigma_squared,
            "per_client_variance": self.noise.per_client_variance,
        }


def local_updates(client, w_start: np.ndarray, eta: float, E: int,
                  round_index: int = 0, client_id: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """E gradient steps from ``w_start``; returns (w_end, u) with u = sum of the E gradients.

    u equals (w_start - w_end) / eta in exact arithmetic; the sum avoids the
    cancellation of that difference.
    """
    if not eta > 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    w = np.array(w_start, dtype=float, copy=True)
    u = np.zeros_like(w)
    for step in range(E):
        g = client.value_grad(w)[1]
        if not np.all(np.isfinite(g)):
            raise DivergedRunError(round_index, client_id, step)
        u += g
        w -= eta * g
    return w, u


def _batched_local_updates(suite: ProblemSuite, ids: np.ndarray, w_start: np.ndarray, eta: float,
                           E: int, round_index: int) -> np.ndarray:
    grad = suite.batch_gradient(ids)
    w = np.repeat(w_start[None, :], ids.size, axis=0)
    u = np.zeros_like(w)
    for step in range(E):
        g = grad(w)
        if not np.all(np.isfinite(g)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(g), axis=1))[0])
            raise DivergedRunError(round_index, int(ids[bad]), step)
        u += g
        w -= eta * g
    return u


def sample_cohort(key: StreamKey, n: int, r: float) -> np.ndarray:
    """Client ids, ascending, each included independently with probability r / n."""
    if not 0 < r <= n:
        raise ValueError(f"r must lie in (0, n], got {r}")
    return np.flatnonzero(uniforms(key, n) < r / n)


def aggregate_and_step(w: np.ndarray, messages: np.ndarray, r: float, beta: float,
                       momentum_state: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """a = (1/r) sum(messages); m <- mu m + a; w <- w - beta m.

    ``messages`` is (cohort, d) and is summed in row order.
    """
    if len(messages) == 0:
        log.info("empty cohort: zero aggregate this round")
        a = np.zeros_like(w)
    else:
        a = np.asarray(messages).sum(axis=0) / r
    m = mu * momentum_state + a
    return w - beta * m, m


def init_point(recipe: str, suite: ProblemSuite, key: StreamKey) -> np.ndarray:
    """Named initializations: I1 = w* + z, I2 = w* + z/5 (z ~ U(0,1)^d), or zero."""
    if recipe == "zero":
        return np.zeros(suite.dimension)
    if recipe in ("I1", "I2"):
        if suite.global_optimum is None:
            solve_global_optimum(suite)
        z = uniforms(key.child("init"), suite.dimension)
        return suite.global_optimum + (z if recipe == "I1" else z / 5.0)
    raise RunConfigError(f"unknown init recipe {recipe!r} (expected I1, I2 or zero)")


def _chunks(ids: np.ndarray, parts: int) -> list[np.ndarray]:
    parts = max(1, min(parts, ids.size))
    return [c for c in np.array_split(ids, parts) if c.size]


def run_federated(config: RunConfig, threads: int = 1) -> IterateTrace:
    """Run K rounds of the configured algorithm.

    With ``threads > 1`` each round's per-client work is split across a thread
    pool; results are gathered in client-id order before the reduction, so the
    trace does not depend on the thread count.
    """
    config.validate()
    suite = config.suite
    if suite.global_optimum is None:
        solve_global_optimum(suite)
    f_star = suite.optimal_value()
    n, d, K, E, r = suite.n, suite.dimension, config.rounds, config.local_steps, config.cohort_rate
    policy = config.policy
    noise = config.noise_scale()
    root = StreamKey(config.master_seed)
    mu = config.schedule.server_momentum

    priv_index = min(int(uniforms(root.child("output"), 1)[0] * K), K - 1)
    w = np.array(config.init, dtype=float, copy=True)
    m = np.zeros(d)
    w_priv = w.copy() if priv_index == 0 else None
    iterates = np.empty((K + 1, d)) if config.keep_iterates else None
    if iterates is not None:
        iterates[0] = w
    update_norms = np.full((K, n), np.nan)
    records: list[RoundRecord] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for k in range(K):
            eta, beta = learning_rate(config.schedule, k)
            cohort = sample_cohort(root.child("cohort", k), n, r)
            if cohort.size:
                parts = _chunks(cohort, threads)
                if pool is None:
                    u_parts = [_batched_local_updates(suite, c, w, eta, E, k) for c in parts]
                else:
                    u_parts = list(pool.map(
                        lambda c: _batched_local_updates(suite, c, w, eta, E, k), parts))
                u = np.concatenate(u_parts, axis=0)
                norms = np.linalg.norm(u, axis=1)
                update_norms[k, cohort] = norms
                g = policy.apply_rows(u, norms)
                zeta = gaussian_block(root.child("noise", k), n, d,
                                      noise.per_client_variance)[cohort]
            else:
                norms = np.empty(0)
                g = zeta = np.zeros((0, d))
            divisor = cohort.size if (config.average_by_actual and cohort.size) else r
            w, m = aggregate_and_step(w, g + zeta, divisor, beta, m, mu)
            if not np.all(np.isfinite(w)):
                raise DivergedRunError(k, -1, E)
            if iterates is not None:
                iterates[k + 1] = w
            if k + 1 == priv_index:
                w_priv = w.copy()
            if cohort.size:
                round_snr = snr(g.sum(axis=0) / divisor, zeta.sum(axis=0) / divisor)
                active = float(np.mean(norms > policy.scale)) if policy.scale else 0.0
                stats = (float(norms.mean()), float(norms.min()), float(norms.max()))
            else:
                round_snr, active, stats = math.nan, 0.0, (math.nan,) * 3
            records.append(RoundRecord(k, suite.value(w) - f_star, round_snr, int(cohort.size),
                                       *stats, active, eta))
    finally:
        if pool is not None:
            pool.shutdown()
    return IterateTrace(records, w, priv_index, w_priv, noise, iterates, update_norms)
