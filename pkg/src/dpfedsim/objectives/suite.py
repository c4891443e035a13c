"""Problem suites: the federated objective f(w) = (1/n) sum_i f_i(w)."""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from dpfedsim.objectives.logistic import LogisticClient
from dpfedsim.objectives.quadratic import QuadraticClient
from dpfedsim.objectives.solvers import conjugate_gradient, gradient_descent_armijo
from dpfedsim.streams import StreamKey, standard_normals

log = logging.getLogger(__name__)

ClientObjective = QuadraticClient | LogisticClient


class ProblemSuite:
    """An ordered list of client objectives sharing one model dimension.

    For all-quadratic suites the factors are also kept stacked, (n, d, k), so
    a whole cohort's gradients come from two batched matmuls.
    """

    def __init__(self, clients: Sequence[ClientObjective], smoothness_bound: float | None = None,
                 global_optimum: np.ndarray | None = None,
                 heterogeneity: np.ndarray | None = None):
        if not clients:
            raise ValueError("a suite needs at least one client")
        dims = {c.dimension for c in clients}
        if len(dims) != 1:
            raise ValueError(f"clients disagree on dimension: {sorted(dims)}")
        self.clients = list(clients)
        self.dimension = dims.pop()
        self._smoothness = smoothness_bound
        self.global_optimum = global_optimum
        self.heterogeneity = heterogeneity
        self.is_quadratic = all(isinstance(c, QuadraticClient) for c in self.clients)
        if self.is_quadratic:
            self._factors = np.stack([c.factor_matrix for c in self.clients])
            self._factors_t = np.ascontiguousarray(self._factors.transpose(0, 2, 1))
            self._optima = np.stack([c.optimum_point for c in self.clients])
        # All-logistic suites with one class count and one L2 coefficient keep
        # their samples stacked client by client.
        self._stacked = (
            all(isinstance(c, LogisticClient) for c in self.clients)
            and len({(c.num_classes, c.l2_coefficient) for c in self.clients}) == 1
        )
        if self._stacked:
            self._x = np.vstack([c.features for c in self.clients])
            self._onehot = np.vstack([c._onehot for c in self.clients])
            counts = np.array([c.num_samples for c in self.clients])
            self._starts = np.concatenate([[0], np.cumsum(counts)])
            self._owner = np.repeat(np.arange(self.n), counts)
            self._counts = counts
            self._classes = self.clients[0].num_classes
            self._l2 = self.clients[0].l2_coefficient
        self._optimal_value: float | None = None

    @property
    def n(self) -> int:
        return len(self.clients)

    @property
    def smoothness_bound(self) -> float:
        """Max over clients of the per-client smoothness estimate."""
        if self._smoothness is None:
            self._smoothness = max(c.smoothness() for c in self.clients)
        return self._smoothness

    def client_values(self, w: np.ndarray) -> np.ndarray:
        if self.is_quadratic:
            v = self._factors_t @ (w - self._optima)[:, :, None]
            return 0.5 * np.sum(v[:, :, 0] ** 2, axis=1)
        if self._stacked:
            loss, _ = self._sample_losses(w)
            per = np.bincount(self._owner, weights=loss, minlength=self.n) / self._counts
            return per + 0.5 * self._l2 * float(w @ w)
        return np.array([c.value(w) for c in self.clients])

    def _sample_losses(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample cross-entropy and softmax residual (probs - onehot)."""
        z = self._x @ w.reshape(self._x.shape[1], self._classes)
        zmax = z.max(axis=1, keepdims=True)
        ez = np.exp(z - zmax)
        total = ez.sum(axis=1, keepdims=True)
        loss = (zmax + np.log(total))[:, 0] - np.sum(z * self._onehot, axis=1)
        return loss, ez / total - self._onehot

    def value(self, w: np.ndarray) -> float:
        return float(np.mean(self.client_values(w)))

    def gradient(self, w: np.ndarray) -> np.ndarray:
        if self.is_quadratic:
            return self.batch_gradient(np.arange(self.n))(np.broadcast_to(w, (self.n, w.size))).mean(0)
        if self._stacked:
            return self.value_grad(w)[1]
        return np.mean([c.value_grad(w)[1] for c in self.clients], axis=0)

    def value_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        if self._stacked:
            loss, resid = self._sample_losses(w)
            weight = 1.0 / (self.n * self._counts[self._owner])
            value = float(loss @ weight) + 0.5 * self._l2 * float(w @ w)
            grad = (self._x.T @ (resid * weight[:, None])).ravel()
            return value, grad + self._l2 * w
        return self.value(w), self.gradient(w)

    def optimal_value(self) -> float:
        if self.global_optimum is None:
            raise ValueError("global optimum not solved yet")
        if self._optimal_value is None:
            self._optimal_value = self.value(self.global_optimum)
        return self._optimal_value

    def batch_gradient(self, ids: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """Gradient map W -> G for the clients ``ids``; row j of W belongs to ids[j].

        Each row is computed by its own small matmul, so a row's result does
        not depend on which other clients share the batch.
        """
        ids = np.asarray(ids, dtype=np.int64)
        if self.is_quadratic:
            if ids.size == self.n and np.array_equal(ids, np.arange(self.n)):
                a, at, opt = self._factors, self._factors_t, self._optima
            else:
                a, at, opt = self._factors[ids], self._factors_t[ids], self._optima[ids]

            def grad(w_rows: np.ndarray) -> np.ndarray:
                v = at @ (w_rows - opt)[:, :, None]
                return (a @ v)[:, :, 0]

            return grad
        if self._stacked:
            return self._logistic_batch_gradient(ids)
        clients = [self.clients[i] for i in ids]

        def grad(w_rows: np.ndarray) -> np.ndarray:
            return np.stack([c.value_grad(w)[1] for c, w in zip(clients, w_rows)])

        return grad


    def _logistic_batch_gradient(self, ids: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        # Per-client sample blocks zero-padded to the suite-wide maximum count,
        # so each client's block has the same shape in every batch.  Padded
        # rows have zero features and contribute exactly zero.
        m, p, c = int(self._counts.max()), self._x.shape[1], self._classes
        x = np.zeros((ids.size, m, p))
        onehot = np.zeros((ids.size, m, c))
        for j, i in enumerate(ids):
            lo, hi = self._starts[i], self._starts[i + 1]
            x[j, : hi - lo] = self._x[lo:hi]
            onehot[j, : hi - lo] = self._onehot[lo:hi]
        xt = np.ascontiguousarray(x.transpose(0, 2, 1))
        scale = 1.0 / self._counts[ids]

        def grad(w_rows: np.ndarray) -> np.ndarray:
            z = x @ w_rows.reshape(ids.size, p, c)
            z -= z.max(axis=2, keepdims=True)
            ez = np.exp(z)
            resid = ez / ez.sum(axis=2, keepdims=True) - onehot
            g = (xt @ resid).reshape(ids.size, p * c)
            return g * scale[:, None] + self._l2 * w_rows

        return grad


def eval_value_grad(client: ClientObjective, w: np.ndarray) -> tuple[float, np.ndarray]:
    w = np.asarray(w, dtype=float)
    if w.shape != (client.dimension,):
        raise ValueError(f"dimension mismatch: model has shape {w.shape}, "
                         f"client expects ({client.dimension},)")
    return client.value_grad(w)


def generate_quadratic_suite(key: StreamKey, n: int = 100, d: int = 200, factor_rank: int = 20,
                             factor_std: float = 1.0 / 20) -> ProblemSuite:
    """n quadratics with w_i* ~ N(0, I_d) and A_i entries ~ N(0, factor_std^2)."""
    if factor_rank > d:
        raise ValueError(f"factor_rank ({factor_rank}) must be <= d ({d})")
    if factor_std <= 0:
        raise ValueError("factor_std must be > 0")
    optima = standard_normals(key.child("optima"), n * d).reshape(n, d)
    factors = factor_std * standard_normals(key.child("factors"), n * d * factor_rank)
    factors = factors.reshape(n, d, factor_rank)
    return ProblemSuite([QuadraticClient(factors[i], optima[i]) for i in range(n)])


def solve_global_optimum(suite: ProblemSuite, tolerance: float = 1e-10) -> np.ndarray:
    """w* with ||grad f(w*)|| <= tolerance; also stored on the suite."""
    if suite.is_quadratic:
        # Stationarity: (sum Q_i) w = sum Q_i w_i*, solved on factored operators.
        a, at = suite._factors, suite._factors_t

        def apply(x):
            v = at @ np.broadcast_to(x, (suite.n, x.size))[:, :, None]
            return (a @ v)[:, :, 0].sum(0)

        b = (a @ (at @ suite._optima[:, :, None]))[:, :, 0].sum(0)
        # ||grad f|| = ||A x - b|| / n
        w = conjugate_gradient(apply, b, tolerance * suite.n * 0.5)
        for _ in range(5):
            if np.linalg.norm(suite.gradient(w)) <= tolerance:
                break
            w = conjugate_gradient(apply, b, tolerance * suite.n * 0.05, x0=w)
    else:
        w = gradient_descent_armijo(suite.value_grad, np.zeros(suite.dimension),
                                    tolerance=tolerance, lipschitz=suite.smoothness_bound)
    gnorm = float(np.linalg.norm(suite.gradient(w)))
    if gnorm > tolerance:
        log.warning("global optimum gradient norm %.3e exceeds tolerance %.1e", gnorm, tolerance)
    suite.global_optimum = w
    suite._optimal_value = None
    return w


def heterogeneity_profile(suite: ProblemSuite, w_star: np.ndarray) -> np.ndarray:
    """Delta_i* = f_i(w*) - min f_i for every client."""
    values = suite.client_values(w_star)
    minima = np.array([c.local_minimum() for c in suite.clients])
    het = np.maximum(values - minima, 0.0)
    suite.heterogeneity = het
    return het
