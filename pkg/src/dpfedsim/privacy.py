"""Privacy budget, the key quantity rho, and Gaussian noise calibration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from dpfedsim.streams import StreamKey, standard_normals

log = logging.getLogger(__name__)


class PrivacyConfigError(ValueError):
    """Raised for a budget outside the non-vacuous regime."""


class ClientCountTooSmall(PrivacyConfigError):
    """Raised when rho >= 1, i.e. n is too small for the requested budget."""


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float
    n_clients: int
    dimension: int
    q_constant: float = 1.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise PrivacyConfigError(f"epsilon must be finite and > 0, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise PrivacyConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.q_constant <= 0:
            raise PrivacyConfigError(f"q_constant must be > 0, got {self.q_constant}")
        if self.n_clients < 1 or self.dimension < 1:
            raise PrivacyConfigError("n_clients and dimension must be positive integers")

    @property
    def rho(self) -> float:
        return key_quantity_rho(self)


@dataclass(frozen=True)
class NoiseScale:
    """Server-average noise variance and the matching per-client variance."""

    sigma_squared: float
    per_client_variance: float

    def with_cohort(self, r: float) -> "NoiseScale":
        return NoiseScale(self.sigma_squared, r * self.sigma_squared)


NON_PRIVATE = NoiseScale(0.0, 0.0)


def key_quantity_rho(budget: PrivacyBudget) -> float:
    """sqrt(q d ln(1/delta)) / (n eps); must be < 1 for a valid private run."""
    rho = math.sqrt(budget.q_constant * budget.dimension * math.log(1.0 / budget.delta)) / (
        budget.n_clients * budget.epsilon
    )
    if rho >= 1.0:
        raise ClientCountTooSmall(
            f"n too small: rho = {rho:.6g} >= 1 for n={budget.n_clients}, "
            f"d={budget.dimension}, eps={budget.epsilon}, delta={budget.delta}"
        )
    return rho


def calibrate_noise_variance(
    budget: PrivacyBudget, rounds: int, clip_scale: float, cohort_rate: float = 1.0
) -> NoiseScale:
    """Noise variance q K C^2 ln(1/delta) / (n^2 eps^2) for a K-round run.

    ``cohort_rate`` is the expected cohort size r; each client adds noise of
    variance r * sigma^2 so the 1/r-scaled server average has variance sigma^2.
    """
    if rounds < 1:
        raise PrivacyConfigError(f"rounds must be >= 1, got {rounds}")
    if clip_scale < 0:
        raise PrivacyConfigError(f"clip scale must be >= 0, got {clip_scale}")
    sigma2 = (
        budget.q_constant
        * rounds
        * clip_scale**2
        * math.log(1.0 / budget.delta)
        / (budget.n_clients**2 * budget.epsilon**2)
    )
    # The accountant's epsilon ceiling has an unknown constant; warn at constant 1.
    ceiling = cohort_rate**2 * rounds / budget.n_clients**2
    if budget.epsilon >= ceiling:
        log.warning(
            "epsilon=%g is not below r^2 K / n^2 = %g; the noise calibration "
            "assumes epsilon = O(r^2 K / n^2)", budget.epsilon, ceiling,
        )
    return NoiseScale(sigma2, cohort_rate * sigma2)


def gaussian_vector(key: StreamKey, dimension: int, variance: float) -> np.ndarray:
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return np.zeros(dimension)
    return math.sqrt(variance) * standard_normals(key, dimension)


def gaussian_block(key: StreamKey, rows: int, dimension: int, variance: float) -> np.ndarray:
    """A (rows, dimension) block of i.i.d. N(0, variance) draws.

    Row ``i`` depends only on ``key`` and ``i``; the engine uses row i as
    client i's noise for the round named by ``key``.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    if variance == 0:
        return np.zeros((rows, dimension))
    return math.sqrt(variance) * standard_normals(key, rows * dimension).reshape(rows, dimension)
