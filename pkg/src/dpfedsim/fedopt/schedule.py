"""Local/global learning-rate schedules."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ScheduleSpec:
    """eta_k = eta0 * decay**k unless ``constant_override`` pins a constant rate.

    beta_k equals eta_k when ``beta_equals_eta``; otherwise it follows
    ``beta0 * decay**k``.  ``server_momentum`` is the heavy-ball coefficient
    applied to the server aggregate (0 disables it).
    """

    eta0: float
    decay: float = 1.0
    beta_equals_eta: bool = True
    constant_override: float | None = None
    server_momentum: float = 0.0
    beta0: float | None = None

    def __post_init__(self):
        if self.constant_override is not None:
            if not self.constant_override > 0:
                raise ValueError(f"constant_override must be > 0, got {self.constant_override}")
        elif not self.eta0 > 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must lie in (0, 1], got {self.decay}")
        if not 0 <= self.server_momentum < 1:
            raise ValueError(f"server_momentum must lie in [0, 1), got {self.server_momentum}")
        if not self.beta_equals_eta and not (self.beta0 and self.beta0 > 0):
            raise ValueError("beta0 > 0 is required when beta_equals_eta is off")


def learning_rate(schedule: ScheduleSpec, k: int) -> tuple[float, float]:
    if k < 0:
        raise ValueError(f"round index must be >= 0, got {k}")
    if schedule.constant_override is not None:
        eta = schedule.constant_override
        return eta, eta if schedule.beta_equals_eta else schedule.beta0
    eta = schedule.eta0 * schedule.decay**k
    beta = eta if schedule.beta_equals_eta else schedule.beta0 * schedule.decay**k
    return eta, beta
