"""Convex quadratic clients f(w) = 1/2 ||A^T (w - w_opt)||^2 kept in factored form."""

from __future__ import annotations

import numpy as np


def power_iteration_max_eig(apply, dim: int, tol: float = 1e-13, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of a symmetric PSD operator given as a matvec callable."""
    v = np.ones(dim) / np.sqrt(dim)
    lam = 0.0
    for _ in range(max_iter):
        av = apply(v)
        norm = np.linalg.norm(av)
        if norm == 0.0:
            return 0.0
        new_lam = float(v @ av)
        v = av / norm
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1.0):
            lam = new_lam
            break
        lam = new_lam
    # Rayleigh quotients approach from below; a final refinement on the converged vector.
    return max(lam, float(v @ apply(v)))


class QuadraticClient:
    """Client objective 1/2 (w - w_opt)^T Q (w - w_opt) with Q = A A^T.

    Q is never formed; gradients cost O(d k) for an A of shape (d, k).
    """

    minimum_value = 0.0

    def __init__(self, factor_matrix: np.ndarray, optimum_point: np.ndarray):
        factor_matrix = np.asarray(factor_matrix, dtype=float)
        optimum_point = np.asarray(optimum_point, dtype=float)
        if factor_matrix.ndim != 2 or optimum_point.shape != (factor_matrix.shape[0],):
            raise ValueError(
                f"factor {factor_matrix.shape} and optimum {optimum_point.shape} do not agree"
            )
        self.factor_matrix = factor_matrix
        self.optimum_point = optimum_point

    @property
    def dimension(self) -> int:
        return self.factor_matrix.shape[0]

    def value_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        v = self.factor_matrix.T @ (w - self.optimum_point)
        return 0.5 * float(v @ v), self.factor_matrix @ v

    def value(self, w: np.ndarray) -> float:
        v = self.factor_matrix.T @ (w - self.optimum_point)
        return 0.5 * float(v @ v)

    def hessian_apply(self, x: np.ndarray) -> np.ndarray:
        return self.factor_matrix @ (self.factor_matrix.T @ x)

    def smoothness(self) -> float:
        # lambda_max(A A^T) = lambda_max(A^T A); iterate on the small k x k side.
        a = self.factor_matrix
        return power_iteration_max_eig(lambda x: a.T @ (a @ x), a.shape[1])

    def local_minimum(self) -> float:
        return 0.0
