"""The governor: executes one run as a lock-step tournament over the bus.

Pacing is strictly sequential - one governor thread drives every exchange -
so a run's record stream is a pure function of its descriptor no matter
which transport carries the messages.  Per round it plays ``n_instances``
episodes (enough that every worker of the busiest agent gets a turn),
collects each agent's transitions, has the conductor learn once per agent,
and starts the next round only after every parameter update is out.

Any worker error, protocol violation or environment failure marks the run
``failed`` in the store and ends it; the executor proceeds with other runs.
"""

from __future__ import annotations

import math
import threading

from ..agents import ExperienceBatch, ExperienceTuple
from ..ctf import MILLI
from ..environment import Environment
from ..errors import GridDuelError, TransportError
from ..spaces import space_to_wire
from ..transport import Envelope, Peer
from .runs import RunDescriptor
from .store import ExperimentStore


class RunFailure(Exception):
    """Internal funnel: anything that should fail the run, not the process."""


class GovernorHost:
    def __init__(self, peer: Peer, env_factory, store: ExperimentStore) -> None:
        self.peer = peer
        self.env_factory = env_factory
        self.store = store
        peer.serve(self._handle)

    # -- protocol surface ---------------------------------------------------

    def _handle(self, envelope: Envelope):
        if envelope.kind == "Heartbeat":
            return "Heartbeat", {"nonce": envelope.payload["nonce"]}
        if envelope.kind != "RunAssign":
            raise TransportError(f"governor cannot serve {envelope.kind}")
        descriptor = RunDescriptor.from_dict(envelope.payload["run"])
        crew = envelope.payload["crew"]
        requester, correlation = envelope.sender_id, envelope.correlation_id
        threading.Thread(
            target=self._execute_deferred,
            args=(descriptor, crew, requester, correlation),
            daemon=True,
        ).start()
        return None

    def _execute_deferred(self, descriptor, crew, requester, correlation) -> None:
        try:
            status, detail = self.execute(descriptor, crew)
        except Exception as exc:  # noqa: BLE001 - a run must always conclude
            status, detail = "failed", f"{type(exc).__name__}: {exc}"
        self.peer.reply(
            requester,
            correlation,
            "RunComplete",
            {"run_id": descriptor.run_id, "status": status, "detail": detail},
        )

    # -- execution ------------------------------------------------------------

    def execute(self, descriptor: RunDescriptor, crew: dict) -> tuple[str, str]:
        plan = descriptor.plan
        self._timeout = float(plan["execution"]["timeout"])
        env = self.env_factory(plan)
        agents = env.agent_names()
        workers: dict[str, list[str]] = {a: list(crew["workers"][a]) for a in agents}
        conductor: str = crew["conductor"]

        interfaces = {
            agent: {
                "sensors": [[sid, space_to_wire(s)] for sid, s in env.sensor_spaces(agent)],
                "actuators": [[aid, space_to_wire(s)] for aid, s in env.actuator_spaces(agent)],
                "kinds": env.actuator_kinds(agent),
                "sensor_kinds": env.sensor_kinds(agent),
            }
            for agent in agents
        }
        writer = self.store.open_run(descriptor, interfaces)
        try:
            self._check_crew(conductor, workers)
            footer = self._play(descriptor, env, agents, workers, conductor, writer)
        except (RunFailure, GridDuelError, TransportError) as exc:
            writer.finish("failed", error=f"{type(exc).__name__}: {exc}")
            return "failed", str(exc)
        except BaseException:
            writer.abandon()
            raise
        writer.finish("ok", **footer)
        return "ok", ""

    def _check_crew(self, conductor: str, workers: dict[str, list[str]]) -> None:
        for name in [conductor] + [w for crew in workers.values() for w in crew]:
            if not self.peer.ping(name, timeout=self._timeout):
                raise RunFailure(f"crew member {name!r} does not answer")

    def _ask(self, to: str, kind: str, payload: dict) -> Envelope:
        reply = self.peer.request(to, kind, payload, timeout=self._timeout)
        if reply.kind == "Error":
            raise RunFailure(f"{to} failed: {reply.payload['message']}")
        return reply

    def _play(self, descriptor, env: Environment, agents, workers, conductor, writer):
        plan = descriptor.plan
        rounds = plan["execution"]["rounds"]
        run_id = descriptor.run_id
        n_instances = max(len(names) for names in workers.values())
        expected_version = {agent: 0 for agent in agents}
        experience_spaces = {
            agent: (
                tuple(env.sensor_spaces(agent)),
                tuple(env.actuator_spaces(agent)),
            )
            for agent in agents
        }
        round_summaries = []

        for round_index in range(rounds):
            experience: dict[str, list[ExperienceTuple]] = {a: [] for a in agents}
            rewards: dict[str, list[float]] = {a: [] for a in agents}
            final_ledgers = []

            for instance in range(n_instances):
                cast = {
                    agent: workers[agent][instance % len(workers[agent])]
                    for agent in agents
                }
                readings = env.reset()
                writer.emit(
                    "reset",
                    round=round_index, instance=instance, readings=readings,
                )
                for agent in agents:
                    reply = self._ask(cast[agent], "EnvReset", {
                        "run_id": run_id,
                        "agent": agent,
                        "round_index": round_index,
                        "total_rounds": rounds,
                        "instance": instance,
                        "sensors": interfaces_wire(env, agent, "sensors"),
                        "actuators": interfaces_wire(env, agent, "actuators"),
                        "sensor_kinds": env.sensor_kinds(agent),
                        "param_version": expected_version[agent],
                    })
                    if reply.payload["param_version"] != expected_version[agent]:
                        raise RunFailure(
                            f"{cast[agent]} acknowledged the wrong parameter version"
                        )

                step = 0
                while True:
                    joint = {}
                    for agent in agents:
                        reply = self._ask(cast[agent], "ActRequest", {
                            "run_id": run_id,
                            "agent": agent,
                            "instance": instance,
                            "step": step,
                            "readings": readings[agent],
                        })
                        joint[agent] = reply.payload["setpoints"]
                    result = env.step(joint)
                    writer.emit(
                        "step",
                        round=round_index,
                        instance=instance,
                        step=step,
                        setpoints=joint,
                        readings=result.readings,
                        rewards=result.rewards,
                        events=[event.to_dict() for event in result.events],
                        ledger=result.ledger,
                        grid=result.grid_state,
                    )
                    for agent in agents:
                        self.peer.notify(cast[agent], "EnvStepResult", {
                            "run_id": run_id,
                            "agent": agent,
                            "instance": instance,
                            "step": step,
                            "reward": result.rewards[agent],
                            "terminated": result.terminated,
                        })
                        experience[agent].append(ExperienceTuple(
                            readings=readings[agent],
                            setpoints=joint[agent],
                            reward=result.rewards[agent],
                            next_readings=result.readings[agent],
                            terminated=result.terminated,
                        ))
                        rewards[agent].append(result.rewards[agent])
                    readings = result.readings
                    step += 1
                    if result.terminated:
                        final_ledgers.append(result.ledger)
                        break

            for agent in agents:
                sensors, actuators = experience_spaces[agent]
                batch = ExperienceBatch(
                    agent=agent,
                    round_index=round_index,
                    sensor_spaces=sensors,
                    actuator_spaces=actuators,
                    tuples=tuple(experience[agent]),
                    sensor_kinds=env.sensor_kinds(agent),
                )
                reply = self._ask(conductor, "ExperienceBatch", {
                    "run_id": run_id, "batch": batch.to_dict(),
                })
                expected_version[agent] = reply.payload["params"]["version"]

            summary = {
                "round": round_index,
                "defender_coins": _mean(l["defender_mc"] for l in final_ledgers) / MILLI,
                "attacker_coins": _mean(l["attacker_mc"] for l in final_ledgers) / MILLI,
                "attacker_won": any(l["defender_mc"] == 0 for l in final_ledgers),
                "mean_rewards": {a: _mean(rewards[a]) for a in agents},
                "param_versions": dict(expected_version),
            }
            round_summaries.append(summary)
            writer.emit("round", **summary)

        return {
            "rounds": round_summaries,
            "winner": "attacker" if round_summaries[-1]["attacker_won"] else "defender",
        }


def interfaces_wire(env: Environment, agent: str, port: str) -> list:
    pairs = env.sensor_spaces(agent) if port == "sensors" else env.actuator_spaces(agent)
    return [[pid, space_to_wire(space)] for pid, space in pairs]


def _mean(values) -> float:
    items = list(values)
    if not items:
        return 0.0
    return math.fsum(items) / len(items)
