"""Per-step performance reward.

Both sides are scored from the same voltage statistic: the mean of the
agent's own voltage sensor readings, pushed through a Gaussian bump centred
on the nominal voltage.  The defender wants the bump high, the attacker
wants it low, so the attacker's value is the sign-flipped bump:

    reward = sign * exp( -(mean - mu)^2 / (2 * sigma^2) ) - offset

with ``sign = -1`` for attackers and ``+1`` for defenders.  With the default
``sigma = 0.05`` the bump is deep in its tail for any serious voltage
excursion, which deliberately treats "bad" and "catastrophic" mean voltages
almost alike; the constant ``offset`` only shifts both ranges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GridDuelError


@dataclass(frozen=True)
class RewardParams:
    mu: float = 1.0  # target mean voltage, pu
    sigma: float = 0.05  # bump width, pu
    offset: float = 0.0  # constant subtracted after the sign is applied
    attacker: bool = False

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise GridDuelError("reward sigma must be positive")
        if not math.isfinite(self.mu) or not math.isfinite(self.offset):
            raise GridDuelError("reward parameters must be finite")


@dataclass(frozen=True)
class SensorSnapshot:
    """The voltage subset of one agent's readings for one step, in a fixed
    sensor-id order chosen by the environment."""

    voltages: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.voltages:
            raise GridDuelError("a sensor snapshot needs at least one voltage")


def performance(params: RewardParams, snapshot: SensorSnapshot) -> float:
    """The agent's reward for one step.

    The mean uses exact float summation, so the result is invariant under
    permutation of the readings.
    """
    mean = math.fsum(snapshot.voltages) / len(snapshot.voltages)
    z = (mean - params.mu) / params.sigma
    bump = math.exp(-0.5 * z * z)
    sign = -1.0 if params.attacker else 1.0
    return sign * bump - params.offset
