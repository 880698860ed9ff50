"""Run generation: the cross product of sweep axes and seeds.

Every run gets a content-derived id - a short hash over (plan name, axis
point, master seed, package version) - so regenerating the same plan yields
the same ids and a run store can recognize work it has already done.

One master seed per run fans out into independent component seeds by keyed
hashing, so the attacker's exploration noise, the defender's, and any other
consumer never share a stream.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
from dataclasses import dataclass

from .. import __version__
from ..transport.envelope import canonical_json
from .plan import apply_override

RUN_ID_CHARS = 12


def component_seed(master_seed: int, component: str) -> int:
    """Derive a stable, well-mixed seed for one named consumer."""
    digest = hashlib.sha256(f"{master_seed}:{component}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def run_identity(plan_name: str, point: dict, seed: int) -> str:
    doc = {
        "plan": plan_name,
        "point": point,
        "seed": seed,
        "package": __version__,
    }
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()[:RUN_ID_CHARS]


@dataclass(frozen=True)
class RunDescriptor:
    """One fully-resolved unit of execution."""

    run_id: str
    plan_name: str
    point: dict
    seed: int
    plan: dict  # the plan document with this point's overrides applied

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "plan_name": self.plan_name,
            "point": self.point,
            "seed": self.seed,
            "plan": self.plan,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunDescriptor":
        return cls(
            run_id=doc["run_id"],
            plan_name=doc["plan_name"],
            point=doc["point"],
            seed=doc["seed"],
            plan=doc["plan"],
        )

    def strategy_seed(self, agent: str, worker_index: int) -> int:
        return component_seed(self.seed, f"strategy:{agent}:{worker_index}")


def generate_runs(plan: dict) -> list[RunDescriptor]:
    """Expand a normalized plan into its ordered list of runs.

    Axes iterate in sorted-name order with seeds as the innermost loop, so
    the sequence is reproducible and new axes extend rather than reshuffle
    existing tooling.
    """
    axes = plan["doe"]["axes"]
    seeds = plan["doe"]["seeds"]
    axis_names = sorted(axes)
    value_lists = [axes[name]["values"] for name in axis_names]
    runs: list[RunDescriptor] = []
    for combo in itertools.product(*value_lists):
        point = dict(zip(axis_names, combo))
        resolved = copy.deepcopy(plan)
        for axis_name, value in point.items():
            apply_override(resolved, axes[axis_name]["field"], value)
        for seed in seeds:
            runs.append(
                RunDescriptor(
                    run_id=run_identity(plan["name"], point, seed),
                    plan_name=plan["name"],
                    point=point,
                    seed=seed,
                    plan=resolved,
                )
            )
    return runs
