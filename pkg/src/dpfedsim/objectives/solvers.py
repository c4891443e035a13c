"""Deterministic solvers used to locate global and per-client minimizers."""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"singular system: conjugate gradient stalled at residual {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


def conjugate_gradient(apply, b: np.ndarray, tolerance: float, x0: np.ndarray | None = None,
                       max_iter: int | None = None) -> np.ndarray:
    """Solve ``apply(x) = b`` for a symmetric PSD operator until ||b - Ax|| <= tolerance.

    Raises SingularSystemError when the residual stops shrinking, which for a
    PSD operator means b has a component outside its range.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    if max_iter is None:
        max_iter = 20 * b.size
    r = b - apply(x)
    p = r.copy()
    rs = float(r @ r)
    best = np.sqrt(rs)
    since_best = 0
    for it in range(max_iter):
        if np.sqrt(rs) <= tolerance:
            return x
        ap = apply(p)
        curvature = float(p @ ap)
        if curvature <= 0:
            raise SingularSystemError(np.sqrt(rs), it)
        step = rs / curvature
        x += step * p
        r -= step * ap
        # Recompute the true residual now and then; the recursion drifts at tight tolerances.
        if (it + 1) % 50 == 0:
            r = b - apply(x)
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
        res = np.sqrt(rs)
        if res < 0.999 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best > 2 * b.size:
                raise SingularSystemError(res, it + 1)
    res = float(np.linalg.norm(b - apply(x)))
    if res <= tolerance:
        return x
    raise SingularSystemError(res, max_iter)


def gradient_descent_armijo(value_grad, w0: np.ndarray, tolerance: float,
                            lipschitz: float | None = None, max_iter: int = 200_000,
                            shrink: float = 0.5, sufficient: float = 1e-4) -> np.ndarray:
    """Full-batch gradient descent with Armijo backtracking to ||grad|| <= tolerance.

    The trial step grows by 2x after each accepted step so flat regions do
    not pin it at the backtracked value.
    """
    w = np.asarray(w0, dtype=float).copy()
    step = 1.0 / lipschitz if lipschitz else 1.0
    value, grad = value_grad(w)
    for _ in range(max_iter):
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) <= tolerance:
            return w
        while True:
            trial = w - step * grad
            tv, tg = value_grad(trial)
            if tv <= value - sufficient * step * gnorm2:
                break
            # Steps at or below 1/L always descend; near the optimum the value
            # test drowns in rounding, so accept them outright.
            if lipschitz and step <= 1.0 / lipschitz:
                break
            step *= shrink
            if step < 1e-300:
                log.warning("line search underflow at ||grad||=%.3e", np.sqrt(gnorm2))
                return w
        w, value, grad = trial, tv, tg
        step *= 2.0
    log.warning("gradient descent hit max_iter=%d at ||grad||=%.3e", max_iter,
                float(np.linalg.norm(grad)))
    return w
