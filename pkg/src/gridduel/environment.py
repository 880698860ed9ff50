"""The playable environment: opaque sensors/actuators over the grid stack.

Agents never see the network.  Each agent gets a wiring table built from
element-kind glob selectors (``load/*``, ``sgen/wind``, ``transformer/*``):

* per matched load/generator: one voltage sensor at its connection bus
  (Box [0.85, 1.15]) and one relative-power sensor (Box [0, 1]), plus one
  scaling actuator - Box [0, 1] for continuous-capable strategies or the
  11-step discrete view (0.0, 0.1, ..., 1.0);
* per matched transformer: one voltage sensor at the LV-side bus and one
  tap actuator over the full discrete tap range.

Sensor and actuator ids are positional tokens (``defender-s004``), so no
element identity or topology leaks to the agent side.

A step applies all defender setpoints first, then all attacker setpoints
(the attacker overrides shared elements), runs protection to its fixpoint,
settles the coin ledger and returns fresh readings plus per-agent rewards.
Episodes terminate when the horizon is reached or the defender's balance
hits zero.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fnmatch import fnmatchcase

from .ctf import CoinLedger
from .errors import DescriptorError, EnvironmentError_, GridDuelError
from .grid.model import GridModel
from .grid.powerflow import PowerFlowSolution, solve
from .protection import (
    ConstraintConfig,
    DisconnectionEvent,
    check_and_cascade,
    scan_violations,
)
from .reward import RewardParams, SensorSnapshot, performance
from .spaces import Box, Discrete, Space, contains, discretize_setpoint

SCALING_STEPS = 11  # discrete scaling ladder: 0%, 10%, ..., 100%
VOLTAGE_SPACE = Box((0.85,), (1.15,))
RELATIVE_POWER_SPACE = Box((0.0,), (1.0,))
SCALING_SPACE = Box((0.0,), (1.0,))

ROLES = ("attacker", "defender")


@dataclass(frozen=True)
class AgentSpec:
    """Plan-level description of one agent's interface to the grid."""

    name: str
    role: str  # "attacker" | "defender"
    sensor_selectors: tuple[str, ...]
    actuator_selectors: tuple[str, ...]
    action_view: str = "continuous"  # or "discrete"
    reward: RewardParams = RewardParams()

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise GridDuelError(f"unknown role {self.role!r}")
        if self.action_view not in ("continuous", "discrete"):
            raise GridDuelError(f"unknown action view {self.action_view!r}")
        wants_inverted = self.role == "attacker"
        if self.reward.attacker != wants_inverted:
            object.__setattr__(
                self, "reward",
                RewardParams(
                    self.reward.mu, self.reward.sigma, self.reward.offset, wants_inverted
                ),
            )


@dataclass(frozen=True)
class SensorWire:
    sensor_id: str
    space: Space
    kind: str  # "voltage" | "relative-power"
    element_id: str
    bus: str


@dataclass(frozen=True)
class ActuatorWire:
    actuator_id: str
    space: Space
    kind: str  # "scaling" | "tap"
    element_id: str


@dataclass
class StepResult:
    step: int
    readings: dict[str, dict[str, object]]  # agent -> sensor id -> wire value
    rewards: dict[str, float]
    events: tuple[DisconnectionEvent, ...]
    ledger: dict
    terminated: bool
    attacker_won: bool
    grid_state: dict  # converged / voltage envelope / dead bus ids


class Environment(ABC):
    """Minimal surface the orchestration layer depends on.

    Anything honouring this interface can stand in for the grid (see the
    mock used by the orchestration tests), which keeps agent and experiment
    code free of grid knowledge.
    """

    @abstractmethod
    def agent_names(self) -> list[str]: ...

    @abstractmethod
    def sensor_spaces(self, agent: str) -> list[tuple[str, Space]]: ...

    @abstractmethod
    def actuator_spaces(self, agent: str) -> list[tuple[str, Space]]: ...

    def actuator_kinds(self, agent: str) -> dict[str, str]:
        """What each actuator drives (``scaling``/``tap``); metadata for reports."""
        return {aid: "scaling" for aid, _ in self.actuator_spaces(agent)}

    def sensor_kinds(self, agent: str) -> dict[str, str]:
        """What each sensor measures (``voltage``/``relative-power``).

        Strategies that build their observation from one family of sensors
        key off this; environments that expose a single homogeneous family
        can keep the default.
        """
        return {sid: "voltage" for sid, _ in self.sensor_spaces(agent)}

    @abstractmethod
    def reset(self) -> dict[str, dict[str, object]]: ...

    @abstractmethod
    def step(self, joint_setpoints: dict[str, dict[str, object]]) -> StepResult: ...

    @property
    @abstractmethod
    def terminated(self) -> bool: ...


def _matched(kind_path: str, selectors: tuple[str, ...]) -> bool:
    return any(fnmatchcase(kind_path, pattern) for pattern in selectors)


class GridEnvironment(Environment):
    """The real thing: power flow, protection, coins and rewards."""

    def __init__(
        self,
        model: GridModel,
        agents: list[AgentSpec],
        horizon: int,
        constraints: ConstraintConfig | None = None,
    ) -> None:
        if horizon < 1:
            raise GridDuelError("horizon must be at least one step")
        names = [a.name for a in agents]
        if len(set(names)) != len(names):
            raise GridDuelError("agent names must be unique")
        model.validate()
        self._pristine = model.copy()
        self._agents = {a.name: a for a in agents}
        self._horizon = horizon
        self._constraints = constraints or ConstraintConfig()
        self._wiring = {a.name: self._wire(a) for a in agents}
        for name, (sensors, actuators) in self._wiring.items():
            if not sensors or not actuators:
                raise GridDuelError(f"agent {name!r} selectors match nothing")
        self._model: GridModel | None = None
        self._ledger: CoinLedger | None = None
        self._solution: PowerFlowSolution | None = None
        self._step = 0
        self._terminated = True  # unusable until reset()

    # -- wiring ---------------------------------------------------------

    def _wire(self, spec: AgentSpec) -> tuple[list[SensorWire], list[ActuatorWire]]:
        sensors: list[SensorWire] = []
        actuators: list[ActuatorWire] = []
        scaling_space: Space = (
            SCALING_SPACE if spec.action_view == "continuous" else Discrete(SCALING_STEPS)
        )
        for inj_id in sorted(self._pristine.injections):
            inj = self._pristine.injections[inj_id]
            if _matched(inj.kind_path, spec.sensor_selectors):
                sensors.append(SensorWire(
                    f"{spec.name}-s{len(sensors):03d}", VOLTAGE_SPACE,
                    "voltage", inj_id, inj.bus,
                ))
                sensors.append(SensorWire(
                    f"{spec.name}-s{len(sensors):03d}", RELATIVE_POWER_SPACE,
                    "relative-power", inj_id, inj.bus,
                ))
            if _matched(inj.kind_path, spec.actuator_selectors):
                actuators.append(ActuatorWire(
                    f"{spec.name}-a{len(actuators):03d}", scaling_space, "scaling", inj_id,
                ))
        for trafo_id in sorted(self._pristine.transformers):
            trafo = self._pristine.transformers[trafo_id]
            if _matched(trafo.kind_path, spec.sensor_selectors):
                sensors.append(SensorWire(
                    f"{spec.name}-s{len(sensors):03d}", VOLTAGE_SPACE,
                    "voltage", trafo_id, trafo.lv_bus,
                ))
            if _matched(trafo.kind_path, spec.actuator_selectors):
                span = trafo.tap_max - trafo.tap_min + 1
                actuators.append(ActuatorWire(
                    f"{spec.name}-a{len(actuators):03d}", Discrete(span), "tap", trafo_id,
                ))
        return sensors, actuators

    # -- interface --------------------------------------------------------

    def agent_names(self) -> list[str]:
        return sorted(self._agents)

    def agent_role(self, agent: str) -> str:
        return self._agents[agent].role

    def sensor_spaces(self, agent: str) -> list[tuple[str, Space]]:
        return [(w.sensor_id, w.space) for w in self._wiring[agent][0]]

    def actuator_spaces(self, agent: str) -> list[tuple[str, Space]]:
        return [(w.actuator_id, w.space) for w in self._wiring[agent][1]]

    def actuator_kinds(self, agent: str) -> dict[str, str]:
        return {w.actuator_id: w.kind for w in self._wiring[agent][1]}

    def sensor_kinds(self, agent: str) -> dict[str, str]:
        return {w.sensor_id: w.kind for w in self._wiring[agent][0]}

    @property
    def terminated(self) -> bool:
        return self._terminated

    @property
    def horizon(self) -> int:
        return self._horizon

    def reset(self) -> dict[str, dict[str, object]]:
        """Fresh episode: pristine grid, full ledger, solved base case.

        Raises :class:`DescriptorError` when the base case is not healthy -
        an environment must begin converged and violation-free.
        """
        model = self._pristine.copy()
        solution = solve(
            model,
            tol=self._constraints.solver_tol,
            max_iter=self._constraints.solver_max_iter,
        )
        base_violations = scan_violations(model, solution, self._constraints, step=0)
        if not solution.converged or base_violations:
            raise DescriptorError(
                "base case unhealthy: "
                + ("power flow diverges" if not solution.converged else
                   f"{len(base_violations)} constraint violations at reset")
            )
        self._model = model
        self._solution = solution
        self._ledger = CoinLedger(horizon=self._horizon)
        self._step = 0
        self._terminated = False
        return {agent: self._readings_for(agent) for agent in self.agent_names()}

    def step(self, joint_setpoints: dict[str, dict[str, object]]) -> StepResult:
        if self._terminated or self._model is None:
            raise EnvironmentError_("step on a terminated or unreset environment")
        for agent in joint_setpoints:
            if agent not in self._agents:
                raise EnvironmentError_(f"unknown agent {agent!r}")

        # Defenders command first; attackers override shared elements.
        ordered = sorted(
            joint_setpoints,
            key=lambda a: (0 if self._agents[a].role == "defender" else 1, a),
        )
        for agent in ordered:
            self._apply(agent, joint_setpoints[agent])

        outcome = check_and_cascade(self._model, self._constraints, self._step)
        self._solution = outcome.solution
        offline = [
            (i.injection_id, i.p_nominal_kw)
            for i in self._model.injections.values()
            if not i.in_service
        ]
        self._ledger.settle_step(outcome.events, offline)

        self._step += 1
        self._terminated = self._step >= self._horizon or self._ledger.attacker_won

        readings = {agent: self._readings_for(agent) for agent in self.agent_names()}
        rewards = {
            agent: performance(self._agents[agent].reward, self._voltage_snapshot(agent))
            for agent in self.agent_names()
        }
        live = [v for v in self._solution.v_mag.values() if v > 0.0]
        return StepResult(
            step=self._step - 1,
            readings=readings,
            rewards=rewards,
            events=outcome.events,
            ledger=self._ledger.snapshot(),
            terminated=self._terminated,
            attacker_won=self._ledger.attacker_won,
            grid_state={
                "converged": self._solution.converged,
                "min_vm": min(live) if live else 0.0,
                "max_vm": max(live) if live else 0.0,
                "dead_buses": list(self._solution.dead_buses),
                "cascade_truncated": outcome.truncated,
            },
        )

    # -- internals ---------------------------------------------------------

    def _apply(self, agent: str, setpoints: dict[str, object]) -> None:
        wires = {w.actuator_id: w for w in self._wiring[agent][1]}
        for actuator_id in sorted(setpoints):
            if actuator_id not in wires:
                raise EnvironmentError_(
                    f"agent {agent!r} has no actuator {actuator_id!r}"
                )
        for actuator_id in sorted(setpoints):
            wire = wires[actuator_id]
            value = setpoints[actuator_id]
            if isinstance(value, list):
                value = tuple(value)
            if not contains(wire.space, value):
                raise EnvironmentError_(
                    f"setpoint {value!r} outside the space of {actuator_id!r}"
                )
            if wire.kind == "scaling":
                inj = self._model.injections[wire.element_id]
                if not inj.in_service:
                    continue  # offline elements ignore commands
                if isinstance(wire.space, Discrete):
                    inj.scaling = discretize_setpoint(
                        SCALING_SPACE, value, SCALING_STEPS
                    )[0]
                else:
                    inj.scaling = float(value[0])
            else:  # tap
                trafo = self._model.transformers[wire.element_id]
                if not trafo.in_service:
                    continue
                trafo.tap = trafo.tap_min + int(value)

    def _readings_for(self, agent: str) -> dict[str, object]:
        readings: dict[str, object] = {}
        for wire in self._wiring[agent][0]:
            if wire.kind == "voltage":
                vm = self._solution.v_mag[wire.bus]
                clamped = min(max(vm, VOLTAGE_SPACE.low[0]), VOLTAGE_SPACE.high[0])
                readings[wire.sensor_id] = [clamped]
            else:
                element = self._model.injections[wire.element_id]
                value = element.scaling if element.in_service else 0.0
                readings[wire.sensor_id] = [value]
        return readings

    def _voltage_snapshot(self, agent: str) -> SensorSnapshot:
        values = []
        for wire in self._wiring[agent][0]:
            if wire.kind == "voltage":
                vm = self._solution.v_mag[wire.bus]
                values.append(min(max(vm, VOLTAGE_SPACE.low[0]), VOLTAGE_SPACE.high[0]))
        return SensorSnapshot(tuple(values))
