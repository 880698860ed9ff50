"""Fans a plan's runs out over a thread pool; each run gets its own bus.

Completed runs are recognized by id and skipped, so re-running a plan picks
up exactly the missing work.  A failed run never stops the sweep - it is
recorded as failed and reported in the summary.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from ..agents import create_mutator, create_strategy
from ..errors import PlanError
from ..transport import make_bus
from .factory import build_environment
from .governor import GovernorHost
from .runs import RunDescriptor, generate_runs
from .store import ExperimentStore
from .workers import ConductorHost, WorkerHost


def execute_plan(
    plan: dict,
    store_root,
    parallelism: int | None = None,
    transport: str | None = None,
    endpoint: str | None = None,
    env_factory=build_environment,
    progress=None,
) -> dict:
    """Run everything the plan asks for; returns a status summary."""
    say = progress or (lambda message: None)
    store = ExperimentStore(store_root, plan["name"])
    transport = transport or plan["execution"]["transport"]
    endpoint = endpoint if endpoint is not None else plan["execution"]["endpoint"]
    width = parallelism or plan["execution"]["max_parallel"]
    if endpoint and (width > 1 or transport != "socket"):
        raise PlanError(
            "a fixed endpoint needs transport=socket and parallelism 1 "
            "(parallel runs each bind their own port)"
        )

    runs = generate_runs(plan)
    pending = [run for run in runs if not store.is_complete(run.run_id)]
    skipped = [run.run_id for run in runs if run.run_id not in {p.run_id for p in pending}]
    for run_id in skipped:
        say(f"skip {run_id} (already complete)")

    summary = {"executed": [], "failed": [], "skipped": sorted(skipped)}
    if not pending:
        return summary

    def job(descriptor: RunDescriptor) -> tuple[str, str, str]:
        say(f"run {descriptor.run_id} start (seed {descriptor.seed})")
        bus = make_bus(transport, endpoint)
        try:
            short = descriptor.run_id
            run_plan = descriptor.plan

            conductor_peer = bus.peer(f"cnd-{short}", "conductor")
            ConductorHost(
                conductor_peer,
                descriptor.run_id,
                mutators={
                    agent["name"]: create_mutator(
                        agent["strategy"], agent["hyperparameters"]
                    )
                    for agent in run_plan["agents"]
                },
            )

            worker_names: dict[str, list[str]] = {}
            for agent in run_plan["agents"]:
                names = []
                for index in range(agent["workers"]):
                    name = f"wrk-{short}-{agent['name']}-{index}"
                    peer = bus.peer(name, "worker")
                    WorkerHost(
                        peer,
                        descriptor.run_id,
                        agent["name"],
                        create_strategy(
                            agent["strategy"],
                            seed=descriptor.strategy_seed(agent["name"], index),
                            hyperparameters=agent["hyperparameters"],
                        ),
                    )
                    names.append(name)
                worker_names[agent["name"]] = names

            governor_name = f"gov-{short}"
            GovernorHost(bus.peer(governor_name, "governor"), env_factory, store)

            client = bus.peer(f"exe-{short}", "executor")
            reply = client.request(
                governor_name,
                "RunAssign",
                {
                    "run": descriptor.to_dict(),
                    "crew": {"conductor": f"cnd-{short}", "workers": worker_names},
                },
                timeout=float(run_plan["execution"]["run_timeout"]),
            )
            if reply.kind != "RunComplete":
                return descriptor.run_id, "failed", reply.payload.get("message", "")
            return (
                descriptor.run_id,
                reply.payload["status"],
                reply.payload.get("detail", ""),
            )
        finally:
            bus.close()

    with ThreadPoolExecutor(max_workers=min(width, len(pending))) as pool:
        for run_id, status, detail in pool.map(job, pending):
            key = "executed" if status == "ok" else "failed"
            summary[key].append(run_id)
            say(f"run {run_id} {status}" + (f": {detail}" if detail else ""))
    summary["executed"].sort()
    summary["failed"].sort()
    return summary
