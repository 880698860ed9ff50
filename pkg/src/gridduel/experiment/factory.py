"""Builds the playable environment a plan describes."""

from __future__ import annotations

import json
from pathlib import Path

from ..environment import AgentSpec, Environment, GridEnvironment
from ..errors import PlanError
from ..grid.model import GridModel
from ..grid.synthetic import generate_city_grid
from ..protection import ConstraintConfig
from ..reward import RewardParams


def load_grid(grid_doc: dict) -> GridModel:
    if "seed" in grid_doc:
        return generate_city_grid(grid_doc["seed"])
    path = Path(grid_doc["file"])
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PlanError(f"cannot read grid file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlanError(f"grid file {path} is not valid JSON: {exc}") from exc
    return GridModel.from_dict(doc)


def build_environment(plan: dict) -> Environment:
    env_doc = plan["environment"]
    model = load_grid(env_doc["grid"])
    solver = env_doc.get("solver", {})
    constraints = ConstraintConfig(
        **env_doc.get("constraints", {}),
        solver_tol=solver.get("tol", 1e-8),
        solver_max_iter=solver.get("max_iter", 20),
    )
    agents = [
        AgentSpec(
            name=agent["name"],
            role=agent["role"],
            sensor_selectors=tuple(agent["sensors"]),
            actuator_selectors=tuple(agent["actuators"]),
            action_view=agent["action_view"],
            reward=RewardParams(
                mu=agent["reward"]["mu"],
                sigma=agent["reward"]["sigma"],
                offset=agent["reward"]["offset"],
                attacker=agent["role"] == "attacker",
            ),
        )
        for agent in plan["agents"]
    ]
    return GridEnvironment(
        model, agents, horizon=env_doc["horizon"], constraints=constraints
    )
