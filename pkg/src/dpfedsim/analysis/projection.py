"""2-D projections of optimization trajectories around an anchor point."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class Projection:
    first: np.ndarray   # (T1, 2)
    second: np.ndarray  # (T2, 2)
    anchor: np.ndarray  # (2,), the projected anchor
    axes: np.ndarray    # (2, d) orthonormal rows (second row zero when degenerate)
    degenerate: bool


def moving_average(points: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1:
        return points.copy()
    half = window // 2
    csum = np.vstack([np.zeros((1, points.shape[1])), np.cumsum(points, axis=0)])
    out = np.empty_like(points, dtype=float)
    T = len(points)
    for t in range(T):
        h = min(half, t, T - 1 - t)
        out[t] = (csum[t + h + 1] - csum[t - h]) / (2 * h + 1)
    return out


def trajectory_projection_2d(first: np.ndarray, second: np.ndarray, anchor: np.ndarray,
                             smoothing_window: int = 1) -> Projection:
    """Project two iterate sequences onto the top-2 principal directions of
    their combined displacements from ``anchor``, then smooth.

    Axis signs are fixed so each axis's largest-magnitude entry is positive.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    if len(first) < 3 or len(second) < 3:
        raise ValueError("need at least 3 iterates per trajectory")
    centered = np.vstack([first, second]) - anchor
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    axes = np.zeros((2, anchor.size))
    degenerate = False
    rank_tol = max(centered.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    for j in range(2):
        if j < s.size and s[j] > rank_tol:
            v = vt[j]
            axes[j] = v if v[np.argmax(np.abs(v))] > 0 else -v
        else:
            degenerate = True
    if degenerate:
        log.warning("trajectory has rank < 2 about the anchor; second coordinate set to zero")
    p1 = (first - anchor) @ axes.T
    p2 = (second - anchor) @ axes.T
    return Projection(moving_average(p1, smoothing_window), moving_average(p2, smoothing_window),
                      np.zeros(2), axes, degenerate)
