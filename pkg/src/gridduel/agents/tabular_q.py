"""Tabular Q-learning over a coarse scalar summary of the readings.

The observation is compressed to a single number - the mean of the voltage
sensor readings, each normalized into [0, 1] by its space bounds - and that
number is bucketed into ``bins`` states.  Voltage is the right summary: the
reward is a function of it, so the bucket index tracks how healthy the grid
currently is, whereas power readings would mostly echo the agent's own last
setpoints.  When the wiring marks no sensor as a voltage sensor (synthetic
harnesses), every sensor is averaged instead.  Each actuator learns an
independent Q table of shape (bins, n): grid actuators are numerous, so a
joint action table would be astronomically large, while per-actuator tables
learn "which level should THIS element sit at when the grid looks like
THAT" - enough to find hostile setpoints and calm defensive ones.

Action selection is epsilon-greedy with ties broken toward the lowest
index; epsilon anneals linearly over the rounds of a run.  Learning happens
between rounds in the mutator, which sweeps the round's transitions with
the classic one-step update

    Q(s, a) += alpha * (r + gamma * max_a' Q(s', a') - Q(s, a))

using the plain reward as target on terminal transitions.

Because each actuator's individual effect on the shared reward is tiny
compared to the noise from everything else moving at once, a single pass
per round wastes most of what the data can tell us.  The mutator therefore
supports experience replay: ``replay`` sets how many previous rounds'
batches it retains alongside the current one, and ``sweeps`` how many times
it passes over that window per round.  Re-sweeping drives the tables toward
the empirical fixpoint of the retained data - the same update rule, applied
until the data is actually absorbed.  Both default to off (``replay=0``,
``sweeps=1``), which is the plain one-pass update.
"""

from __future__ import annotations

import math

from ..errors import GridDuelError
from ..spaces import Discrete, Space
from .base import ExperienceBatch, Strategy, StrategyMutator

DEFAULTS = {
    "bins": 16,
    "alpha": 0.1,
    "gamma": 0.95,
    "epsilon_start": 0.3,
    "epsilon_end": 0.01,
    "replay": 0,
    "sweeps": 1,
}


def observed_sensors(
    sensor_spaces: tuple[tuple[str, Space], ...], sensor_kinds: dict
) -> tuple[tuple[str, Space], ...]:
    """The sensors the observation is built from: the voltage family."""
    voltage = tuple(
        (sid, space)
        for sid, space in sensor_spaces
        if sensor_kinds.get(sid) == "voltage"
    )
    return voltage or tuple(sensor_spaces)


def state_bin(
    readings: dict, sensor_spaces: tuple[tuple[str, Space], ...], bins: int
) -> int:
    """Bucket the normalized mean reading; shared by strategy and mutator."""
    normalized = []
    for sensor_id, space in sensor_spaces:
        value = readings[sensor_id]
        if isinstance(space, Discrete):
            scalar = value / max(1, space.n - 1)
        else:
            lo, hi = space.low[0], space.high[0]
            scalar = (value[0] - lo) / (hi - lo) if hi > lo else 0.0
        normalized.append(min(1.0, max(0.0, scalar)))
    if not normalized:
        return 0
    mean = math.fsum(normalized) / len(normalized)
    return min(bins - 1, int(mean * bins))


def _zero_table(bins: int, n: int) -> list[list[float]]:
    return [[0.0] * n for _ in range(bins)]


def _greedy(row: list[float]) -> int:
    best = 0
    for action in range(1, len(row)):
        if row[action] > row[best]:
            best = action
    return best


class TabularQStrategy(Strategy):
    capability = "discrete"

    def __init__(self, seed: int, hyperparameters: dict | None = None) -> None:
        super().__init__(seed, hyperparameters)
        merged = {**DEFAULTS, **self.hyperparameters}
        self.bins = int(merged["bins"])
        self.epsilon_start = float(merged["epsilon_start"])
        self.epsilon_end = float(merged["epsilon_end"])
        if self.bins < 1:
            raise GridDuelError("state bins must be positive")
        self.epsilon = self.epsilon_start
        self.tables: dict[str, list[list[float]]] = {}
        self._observed: tuple[tuple[str, Space], ...] = ()

    def bind(self, sensor_spaces, actuator_spaces, sensor_kinds=None) -> None:
        super().bind(sensor_spaces, actuator_spaces, sensor_kinds)
        self._observed = observed_sensors(self._sensor_spaces, self._sensor_kinds)
        for actuator_id, space in self._actuator_spaces:
            self.tables.setdefault(actuator_id, _zero_table(self.bins, space.n))

    def begin_episode(self, round_index: int, total_rounds: int) -> None:
        progress = round_index / max(1, total_rounds - 1)
        progress = min(1.0, max(0.0, progress))
        self.epsilon = (
            self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress
        )

    def propose_actions(self, readings: dict) -> dict:
        state = state_bin(readings, self._observed, self.bins)
        actions: dict = {}
        for actuator_id, space in self._actuator_spaces:
            if self.epsilon > 0.0 and self._rng.random() < self.epsilon:
                actions[actuator_id] = self._rng.randrange(space.n)
            else:
                actions[actuator_id] = _greedy(self.tables[actuator_id][state])
        return actions

    def export_params(self) -> dict:
        return {
            "version": self._version,
            "tables": {aid: [row[:] for row in t] for aid, t in self.tables.items()},
        }

    def _ingest_params(self, blob: dict) -> None:
        self.tables = {
            aid: [list(map(float, row)) for row in table]
            for aid, table in blob.get("tables", {}).items()
        }


class TabularQMutator(StrategyMutator):
    def __init__(self, hyperparameters: dict | None = None) -> None:
        super().__init__(hyperparameters)
        merged = {**DEFAULTS, **self.hyperparameters}
        self.bins = int(merged["bins"])
        self.alpha = float(merged["alpha"])
        self.gamma = float(merged["gamma"])
        self.replay = int(merged["replay"])
        self.sweeps = int(merged["sweeps"])
        if self.replay < 0:
            raise GridDuelError("replay must be >= 0 retained rounds")
        if self.sweeps < 1:
            raise GridDuelError("sweeps must be >= 1 passes per round")
        # Retained windows of pre-binned transitions, oldest round first.
        # Purely a function of the batches seen, so reruns stay reproducible.
        self._window: list[list[tuple[int, dict, float, int, bool]]] = []

    def mutate(self, params: dict, batch: ExperienceBatch) -> dict:
        tables = {
            aid: [row[:] for row in table]
            for aid, table in params.get("tables", {}).items()
        }
        for actuator_id, space in batch.actuator_spaces:
            if not isinstance(space, Discrete):
                raise GridDuelError("tabular Q-learning needs discrete actuators")
            tables.setdefault(actuator_id, _zero_table(self.bins, space.n))

        observed = observed_sensors(batch.sensor_spaces, batch.sensor_kinds)
        self._window.append(
            [
                (
                    state_bin(t.readings, observed, self.bins),
                    t.setpoints,
                    t.reward,
                    state_bin(t.next_readings, observed, self.bins),
                    t.terminated,
                )
                for t in batch.tuples
            ]
        )
        del self._window[: -(self.replay + 1)]

        actuator_ids = [aid for aid, _ in batch.actuator_spaces]
        for _ in range(self.sweeps):
            for transitions in self._window:
                for state, setpoints, reward, successor, terminated in transitions:
                    for actuator_id in actuator_ids:
                        action = int(setpoints[actuator_id])
                        row = tables[actuator_id][state]
                        if terminated:
                            target = reward
                        else:
                            target = reward + self.gamma * max(
                                tables[actuator_id][successor]
                            )
                        row[action] += self.alpha * (target - row[action])

        return {"version": int(params.get("version", 0)) + 1, "tables": tables}
