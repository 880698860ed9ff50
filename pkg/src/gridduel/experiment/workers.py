"""Bus-facing hosts for strategies and for the learning conductor.

A :class:`WorkerHost` owns one strategy instance and answers the governor's
requests for it.  It keeps no environment knowledge: everything arrives as
opaque sensor/actuator ids and spaces.

The :class:`ConductorHost` owns the canonical parameter blob per agent.
After each round the governor sends it the round's experience; it mutates
the blob, broadcasts the new version to the agent's parameter topic, and
only then replies - so by the time the governor moves on, every worker
already holds the update (see the bus ordering guarantee).
"""

from __future__ import annotations

from ..agents import ExperienceBatch, Strategy, StrategyMutator
from ..errors import TransportError
from ..spaces import space_from_wire
from ..transport import Envelope, Peer


def params_topic(run_id: str, agent: str) -> str:
    return f"params/{run_id}/{agent}"


def wire_setpoints(setpoints: dict) -> dict:
    return {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in setpoints.items()
    }


class WorkerHost:
    def __init__(self, peer: Peer, run_id: str, agent: str, strategy: Strategy) -> None:
        self.peer = peer
        self.run_id = run_id
        self.agent = agent
        self.strategy = strategy
        peer.subscribe(params_topic(run_id, agent), self._on_params)
        peer.serve(self._handle)

    def _on_params(self, envelope: Envelope) -> None:
        if envelope.payload.get("agent") == self.agent:
            self.strategy.apply_params(envelope.payload["params"])

    def _handle(self, envelope: Envelope):
        payload = envelope.payload
        if envelope.kind == "Heartbeat":
            return "Heartbeat", {"nonce": payload["nonce"]}
        if envelope.kind == "EnvStepResult":
            return None  # informational; this strategy family learns between rounds
        if envelope.kind == "EnvReset":
            self._guard(payload)
            sensors = [(sid, space_from_wire(w)) for sid, w in payload["sensors"]]
            actuators = [(aid, space_from_wire(w)) for aid, w in payload["actuators"]]
            self.strategy.bind(sensors, actuators, payload.get("sensor_kinds"))
            self.strategy.begin_episode(payload["round_index"], payload["total_rounds"])
            if self.strategy.params_version != payload["param_version"]:
                raise TransportError(
                    f"parameter skew on {self.peer.name}: strategy at "
                    f"v{self.strategy.params_version}, governor expects "
                    f"v{payload['param_version']}"
                )
            return "EnvResetResult", {
                "run_id": self.run_id,
                "agent": self.agent,
                "instance": payload["instance"],
                "param_version": self.strategy.params_version,
            }
        if envelope.kind == "ActRequest":
            self._guard(payload)
            setpoints = self.strategy.propose_actions(payload["readings"])
            expected = {aid for aid, _ in self.strategy.bound_actuators}
            if set(setpoints) != expected:
                raise TransportError(
                    f"strategy on {self.peer.name} answered {len(setpoints)} "
                    f"setpoints for {len(expected)} actuators"
                )
            return "ActResponse", {
                "run_id": self.run_id,
                "agent": self.agent,
                "instance": payload["instance"],
                "step": payload["step"],
                "setpoints": wire_setpoints(setpoints),
            }
        raise TransportError(f"worker cannot serve {envelope.kind}")

    def _guard(self, payload: dict) -> None:
        if payload.get("run_id") != self.run_id or payload.get("agent") != self.agent:
            raise TransportError(
                f"message for run {payload.get('run_id')!r}/{payload.get('agent')!r} "
                f"reached worker of {self.run_id!r}/{self.agent!r}"
            )


class ConductorHost:
    def __init__(
        self, peer: Peer, run_id: str, mutators: dict[str, StrategyMutator]
    ) -> None:
        self.peer = peer
        self.run_id = run_id
        self.mutators = mutators
        self.params: dict[str, dict] = {agent: {"version": 0} for agent in mutators}
        peer.serve(self._handle)

    def _handle(self, envelope: Envelope):
        if envelope.kind == "Heartbeat":
            return "Heartbeat", {"nonce": envelope.payload["nonce"]}
        if envelope.kind != "ExperienceBatch":
            raise TransportError(f"conductor cannot serve {envelope.kind}")
        if envelope.payload.get("run_id") != self.run_id:
            raise TransportError("experience for a different run")
        batch = ExperienceBatch.from_dict(envelope.payload["batch"])
        if batch.agent not in self.mutators:
            raise TransportError(f"no mutator for agent {batch.agent!r}")
        self.params[batch.agent] = self.mutators[batch.agent].mutate(
            self.params[batch.agent], batch
        )
        update = {
            "run_id": self.run_id,
            "agent": batch.agent,
            "params": self.params[batch.agent],
        }
        self.peer.publish(params_topic(self.run_id, batch.agent),
                          "ParameterUpdate", update)
        return "ParameterUpdate", update
