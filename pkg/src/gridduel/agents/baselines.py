"""Non-learning reference strategies: uniform noise and a fixed level."""

from __future__ import annotations

from ..errors import GridDuelError
from ..spaces import Discrete
from .base import IdentityMutator, Strategy


class RandomStrategy(Strategy):
    """Uniform noise over every actuator space; useful as a floor baseline."""

    capability = "continuous"

    def propose_actions(self, readings: dict) -> dict:
        actions: dict = {}
        for actuator_id, space in self._actuator_spaces:
            if isinstance(space, Discrete):
                actions[actuator_id] = self._rng.randrange(space.n)
            else:
                actions[actuator_id] = tuple(
                    self._rng.uniform(lo, hi) for lo, hi in zip(space.low, space.high)
                )
        return actions


class ConstantStrategy(Strategy):
    """Holds every actuator at one relative level for the whole episode.

    ``level`` 0.0 means the bottom of each space, 1.0 the top; discrete
    actuators snap to the nearest index.  The default of 1.0 reproduces the
    base case on scaling actuators.
    """

    capability = "continuous"

    def __init__(self, seed: int, hyperparameters: dict | None = None) -> None:
        super().__init__(seed, hyperparameters)
        self.level = float(self.hyperparameters.get("level", 1.0))
        if not 0.0 <= self.level <= 1.0:
            raise GridDuelError(f"constant level {self.level} outside [0, 1]")

    def propose_actions(self, readings: dict) -> dict:
        actions: dict = {}
        for actuator_id, space in self._actuator_spaces:
            if isinstance(space, Discrete):
                actions[actuator_id] = int(self.level * (space.n - 1) + 0.5)
            else:
                actions[actuator_id] = tuple(
                    lo + self.level * (hi - lo)
                    for lo, hi in zip(space.low, space.high)
                )
        return actions


class RandomMutator(IdentityMutator):
    pass


class ConstantMutator(IdentityMutator):
    pass
