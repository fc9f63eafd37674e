"""Annealing schedules for the driver weight s and inverse temperature beta.

The quantum-annealed solver first ramps the driver mixing weight s from s0
down to zero over tau1 iterations (the annealing phase, with beta held at
beta0), then cools beta linearly from beta0 to 1 between tau1 and tau2, and
finally iterates at (beta, s) = (1, 0) until convergence. The deterministic
annealing variant reuses the beta leg with s pinned at zero and additionally
allows high-temperature starts beta0 < 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class AnnealingSchedule:
    """Piecewise-linear schedule parameters.

    ``s0`` is the initial driver weight in [0, 1]; ``beta0`` the starting
    inverse temperature (any positive value at the type level — the
    quantum-annealed path additionally requires beta0 >= 1, enforced by
    :func:`validate_qavb_schedule`, while beta0 < 1 is reserved for the
    deterministic-annealing leg); ``tau1`` the end of the s ramp; ``tau2``
    the end of the beta ramp.
    """

    s0: float
    beta0: float
    tau1: int
    tau2: int

    def __post_init__(self):
        if not 0.0 <= self.s0 <= 1.0:
            raise ValidationError(f"s0 must lie in [0, 1], got {self.s0}")
        if not self.beta0 > 0.0:
            raise ValidationError(f"beta0 must be positive, got {self.beta0}")
        if int(self.tau1) != self.tau1 or int(self.tau2) != self.tau2:
            raise ValidationError("tau1 and tau2 must be integers")
        if self.tau1 < 1:
            raise ValidationError(f"tau1 must be >= 1, got {self.tau1}")
        if self.tau2 < self.tau1:
            raise ValidationError(
                f"tau2 must be >= tau1, got tau2={self.tau2} < tau1={self.tau1}"
            )
        object.__setattr__(self, "s0", float(self.s0))
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "tau1", int(self.tau1))
        object.__setattr__(self, "tau2", int(self.tau2))


def validate_qavb_schedule(sched: AnnealingSchedule) -> AnnealingSchedule:
    """The quantum-annealed path anneals beta downward, so it needs
    beta0 >= 1."""
    if sched.beta0 < 1.0:
        raise ValidationError(
            f"quantum-annealed runs require beta0 >= 1, got {sched.beta0}"
        )
    return sched


def schedule_at(t: int, sched: AnnealingSchedule) -> tuple[float, float]:
    """(beta_t, s_t) for the quantum-annealed schedule.

    s_t = s0 * max(1 - t/tau1, 0); beta_t stays at beta0 through tau1, ramps
    linearly to 1 at tau2, and stays at 1 afterwards.
    """
    if t < 0:
        raise ValidationError(f"iteration index must be nonnegative, got {t}")
    s = sched.s0 * max(1.0 - t / sched.tau1, 0.0)
    if t <= sched.tau1:
        beta = sched.beta0
    elif t >= sched.tau2:
        beta = 1.0
    else:
        beta = 1.0 + (sched.beta0 - 1.0) * (sched.tau2 - t) / (sched.tau2 - sched.tau1)
    return beta, s


def davb_schedule_at(t: int, sched: AnnealingSchedule) -> tuple[float, float]:
    """(beta_t, 0) for the deterministic-annealing schedule: the same beta
    leg with the driver switched off; beta0 < 1 is allowed."""
    beta, _ = schedule_at(t, sched)
    return beta, 0.0
