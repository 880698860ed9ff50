"""Strategy and learning interfaces.

A *strategy* turns sensor readings into one setpoint per actuator.  It is
bound once per run to its interface (the sensor and actuator spaces the
environment granted) and then acts step after step.  All randomness comes
from the seed it was constructed with, so a strategy is a pure function of
(seed, parameter blob, reading history).

A *mutator* is the learning half: between rounds it folds a batch of
experience into the parameter blob and bumps the blob's version.  Strategies
adopt any blob with a newer version and ignore stale or duplicate
deliveries, which makes parameter distribution safe over an at-least-once
channel.
"""

from __future__ import annotations

import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

from ..errors import GridDuelError
from ..spaces import Discrete, Space, space_from_wire, space_to_wire

CAPABILITIES = ("continuous", "discrete")


@dataclass(frozen=True)
class ExperienceTuple:
    """One transition as seen by a single agent."""

    readings: dict
    setpoints: dict
    reward: float
    next_readings: dict
    terminated: bool

    def to_dict(self) -> dict:
        return {
            "readings": self.readings,
            "setpoints": self.setpoints,
            "reward": self.reward,
            "next_readings": self.next_readings,
            "terminated": self.terminated,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperienceTuple":
        return cls(
            readings=doc["readings"],
            setpoints=doc["setpoints"],
            reward=doc["reward"],
            next_readings=doc["next_readings"],
            terminated=doc["terminated"],
        )


@dataclass(frozen=True)
class ExperienceBatch:
    """Everything a mutator needs to learn from one round of play."""

    agent: str
    round_index: int
    sensor_spaces: tuple[tuple[str, Space], ...]
    actuator_spaces: tuple[tuple[str, Space], ...]
    tuples: tuple[ExperienceTuple, ...]
    sensor_kinds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "round_index": self.round_index,
            "sensor_spaces": [
                [sid, space_to_wire(space)] for sid, space in self.sensor_spaces
            ],
            "actuator_spaces": [
                [aid, space_to_wire(space)] for aid, space in self.actuator_spaces
            ],
            "tuples": [t.to_dict() for t in self.tuples],
            "sensor_kinds": dict(self.sensor_kinds),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperienceBatch":
        return cls(
            agent=doc["agent"],
            round_index=doc["round_index"],
            sensor_spaces=tuple(
                (sid, space_from_wire(wire)) for sid, wire in doc["sensor_spaces"]
            ),
            actuator_spaces=tuple(
                (aid, space_from_wire(wire)) for aid, wire in doc["actuator_spaces"]
            ),
            tuples=tuple(ExperienceTuple.from_dict(t) for t in doc["tuples"]),
            sensor_kinds=dict(doc.get("sensor_kinds", {})),
        )


class Strategy(ABC):
    """Maps readings to a full set of actuator setpoints.

    ``capability`` declares which actuator spaces the strategy can drive:
    ``"continuous"`` handles both Box and Discrete actuators, ``"discrete"``
    only Discrete ones (the plan layer requests the discrete action view for
    such strategies).
    """

    capability: str = "continuous"

    def __init__(self, seed: int, hyperparameters: dict | None = None) -> None:
        self._rng = random.Random(seed)
        self.hyperparameters = dict(hyperparameters or {})
        self._sensor_spaces: tuple[tuple[str, Space], ...] = ()
        self._actuator_spaces: tuple[tuple[str, Space], ...] = ()
        self._sensor_kinds: dict = {}
        self._version = 0

    # -- lifecycle ------------------------------------------------------

    def bind(
        self,
        sensor_spaces: list[tuple[str, Space]],
        actuator_spaces: list[tuple[str, Space]],
        sensor_kinds: dict | None = None,
    ) -> None:
        """Attach the agent interface; called once before the first episode."""
        if self.capability == "discrete":
            bad = [aid for aid, space in actuator_spaces if not isinstance(space, Discrete)]
            if bad:
                raise GridDuelError(
                    f"discrete-only strategy bound to continuous actuators {bad}"
                )
        self._sensor_spaces = tuple(sensor_spaces)
        self._actuator_spaces = tuple(actuator_spaces)
        self._sensor_kinds = dict(sensor_kinds or {})

    def begin_episode(self, round_index: int, total_rounds: int) -> None:
        """Hook for per-round schedules (exploration annealing etc.)."""

    @property
    def bound_actuators(self) -> tuple[tuple[str, Space], ...]:
        return self._actuator_spaces

    @abstractmethod
    def propose_actions(self, readings: dict) -> dict:
        """Return exactly one setpoint per bound actuator."""

    # -- parameters -----------------------------------------------------

    @property
    def params_version(self) -> int:
        return self._version

    def export_params(self) -> dict:
        return {"version": self._version}

    def apply_params(self, blob: dict) -> bool:
        """Adopt ``blob`` if it is newer; returns whether anything changed."""
        version = int(blob.get("version", 0))
        if version <= self._version:
            return False
        self._version = version
        self._ingest_params(blob)
        return True

    def _ingest_params(self, blob: dict) -> None:
        """Subclass hook: copy learned content out of a newer blob."""


class StrategyMutator(ABC):
    """Evolves a parameter blob from one round's experience."""

    def __init__(self, hyperparameters: dict | None = None) -> None:
        self.hyperparameters = dict(hyperparameters or {})

    @abstractmethod
    def mutate(self, params: dict, batch: ExperienceBatch) -> dict:
        """Return the successor blob; must raise the version by one."""


class IdentityMutator(StrategyMutator):
    """For strategies that do not learn: only advances the version."""

    def mutate(self, params: dict, batch: ExperienceBatch) -> dict:
        successor = dict(params)
        successor["version"] = int(params.get("version", 0)) + 1
        return successor
