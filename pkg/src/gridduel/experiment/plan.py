"""Experiment plans: a YAML document describing grids, agents and sweeps.

A plan is data, not code.  ``load_plan`` parses, fills defaults and
validates; everything downstream (run generation, execution, reporting)
works off the normalized dict.  Design-of-experiment axes address plan
fields by dotted path - list entries with names are addressed by name, so
``agents.red.hyperparameters.epsilon_start`` reaches into the agent called
``red``.
"""

from __future__ import annotations

import copy
import re
from pathlib import Path

import yaml

from ..agents import REGISTRY
from ..errors import PlanError

PLAN_SCHEMA = "gridduel-plan/1"

_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_-]*$")

EXECUTION_DEFAULTS = {
    "rounds": 10,
    "max_parallel": 1,
    "transport": "loopback",
    "endpoint": None,
    "timeout": 30.0,
    "run_timeout": 3600.0,
}

REWARD_DEFAULTS = {"mu": 1.0, "sigma": 0.05, "offset": 0.0}


def _is_int(value) -> bool:
    return type(value) is int


def _is_number(value) -> bool:
    return type(value) in (int, float)


def load_plan(path: str | Path) -> dict:
    """Parse, normalize and validate a plan file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanError(f"cannot read plan {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise PlanError(f"plan {path} is not valid YAML: {exc}") from exc
    return prepare_plan(doc)


def prepare_plan(doc) -> dict:
    """Normalize an already-parsed plan document and validate it."""
    normalized = normalize_plan(doc)
    validate_plan(normalized)
    return normalized


def normalize_plan(doc) -> dict:
    if not isinstance(doc, dict):
        raise PlanError("plan must be a mapping")
    out = copy.deepcopy(doc)
    execution = out.setdefault("execution", {})
    if isinstance(execution, dict):
        for key, default in EXECUTION_DEFAULTS.items():
            execution.setdefault(key, default)
    doe = out.setdefault("doe", {})
    if isinstance(doe, dict):
        doe.setdefault("axes", {})
        doe.setdefault("seeds", [0])
    if isinstance(out.get("agents"), list):
        for agent in out["agents"]:
            if isinstance(agent, dict):
                agent.setdefault("workers", 1)
                agent.setdefault("hyperparameters", {})
                reward = agent.setdefault("reward", {})
                if isinstance(reward, dict):
                    for key, default in REWARD_DEFAULTS.items():
                        reward.setdefault(key, default)
                if "action_view" not in agent and agent.get("strategy") in REGISTRY:
                    capability = REGISTRY[agent["strategy"]][0].capability
                    agent["action_view"] = (
                        "discrete" if capability == "discrete" else "continuous"
                    )
    return out


def validate_plan(doc: dict) -> None:  # noqa: C901 - one rule per clause
    def fail(message: str) -> None:
        raise PlanError(message)

    if doc.get("schema") != PLAN_SCHEMA:
        fail(f"plan schema must be {PLAN_SCHEMA!r}, got {doc.get('schema')!r}")
    name = doc.get("name")
    if not isinstance(name, str) or not _NAME.match(name):
        fail("plan name must be a bare token (letters, digits, -, _)")

    environment = doc.get("environment")
    if not isinstance(environment, dict):
        fail("plan needs an 'environment' mapping")
    grid = environment.get("grid")
    if not isinstance(grid, dict) or set(grid) not in ({"seed"}, {"file"}):
        fail("environment.grid must be exactly one of {seed: int} or {file: path}")
    if "seed" in grid and not _is_int(grid["seed"]):
        fail("environment.grid.seed must be an integer")
    if "file" in grid and not isinstance(grid["file"], str):
        fail("environment.grid.file must be a path string")
    if not _is_int(environment.get("horizon")) or environment["horizon"] < 1:
        fail("environment.horizon must be a positive integer")
    constraints = environment.get("constraints", {})
    if not isinstance(constraints, dict):
        fail("environment.constraints must be a mapping")
    allowed = {"v_min", "v_max", "v_cut", "loading_limit", "cascade_cap"}
    for key, value in constraints.items():
        if key not in allowed:
            fail(f"unknown constraint {key!r}; allowed: {sorted(allowed)}")
        if not _is_number(value):
            fail(f"constraint {key!r} must be numeric")
    solver = environment.get("solver", {})
    if not isinstance(solver, dict) or not set(solver) <= {"tol", "max_iter"}:
        fail("environment.solver accepts only 'tol' and 'max_iter'")
    if "tol" in solver and not (_is_number(solver["tol"]) and solver["tol"] > 0):
        fail("solver tol must be a positive number")
    if "max_iter" in solver and not (_is_int(solver["max_iter"]) and solver["max_iter"] >= 1):
        fail("solver max_iter must be a positive integer")

    agents = doc.get("agents")
    if not isinstance(agents, list) or len(agents) < 2:
        fail("plan needs at least two agents (one per side)")
    names = []
    roles = set()
    for agent in agents:
        if not isinstance(agent, dict):
            fail("each agent must be a mapping")
        aname = agent.get("name")
        if not isinstance(aname, str) or not _NAME.match(aname):
            fail(f"agent name {aname!r} must be a bare token")
        names.append(aname)
        role = agent.get("role")
        if role not in ("attacker", "defender"):
            fail(f"agent {aname!r} role must be attacker or defender")
        roles.add(role)
        strategy = agent.get("strategy")
        if strategy not in REGISTRY:
            fail(f"agent {aname!r} strategy {strategy!r} unknown; have {sorted(REGISTRY)}")
        if not isinstance(agent.get("hyperparameters"), dict):
            fail(f"agent {aname!r} hyperparameters must be a mapping")
        reward = agent.get("reward", {})
        if not isinstance(reward, dict) or not set(reward) <= set(REWARD_DEFAULTS):
            fail(f"agent {aname!r} reward accepts only {sorted(REWARD_DEFAULTS)}")
        for key in reward:
            if not _is_number(reward[key]):
                fail(f"agent {aname!r} reward {key} must be numeric")
        if reward.get("sigma", 0.05) <= 0:
            fail(f"agent {aname!r} reward sigma must be positive")
        for port in ("sensors", "actuators"):
            selectors = agent.get(port)
            if (
                not isinstance(selectors, list)
                or not selectors
                or not all(isinstance(s, str) and s for s in selectors)
            ):
                fail(f"agent {aname!r} needs a non-empty list of {port} selectors")
        if not _is_int(agent.get("workers")) or agent["workers"] < 1:
            fail(f"agent {aname!r} workers must be a positive integer")
        view = agent.get("action_view")
        if view not in ("continuous", "discrete"):
            fail(f"agent {aname!r} action_view must be continuous or discrete")
        if REGISTRY[strategy][0].capability == "discrete" and view != "discrete":
            fail(
                f"agent {aname!r}: strategy {strategy!r} is discrete-only and "
                f"cannot take the continuous action view"
            )
    if len(set(names)) != len(names):
        fail("agent names must be unique")
    if roles != {"attacker", "defender"}:
        fail("plan needs at least one attacker and one defender")

    execution = doc.get("execution")
    if not isinstance(execution, dict) or not set(execution) <= set(EXECUTION_DEFAULTS):
        fail(f"execution accepts only {sorted(EXECUTION_DEFAULTS)}")
    if not _is_int(execution["rounds"]) or execution["rounds"] < 1:
        fail("execution.rounds must be a positive integer")
    if not _is_int(execution["max_parallel"]) or execution["max_parallel"] < 1:
        fail("execution.max_parallel must be a positive integer")
    if execution["transport"] not in ("loopback", "socket"):
        fail("execution.transport must be loopback or socket")
    if execution["endpoint"] is not None and not isinstance(execution["endpoint"], str):
        fail("execution.endpoint must be a host:port string")
    for key in ("timeout", "run_timeout"):
        if not _is_number(execution[key]) or execution[key] <= 0:
            fail(f"execution.{key} must be a positive number")

    doe = doc.get("doe")
    if not isinstance(doe, dict) or not set(doe) <= {"axes", "seeds"}:
        fail("doe accepts only 'axes' and 'seeds'")
    axes = doe["axes"]
    if not isinstance(axes, dict):
        fail("doe.axes must be a mapping")
    for axis_name, axis in axes.items():
        if not isinstance(axis_name, str) or not _NAME.match(axis_name):
            fail(f"axis name {axis_name!r} must be a bare token")
        if not isinstance(axis, dict) or set(axis) != {"field", "values"}:
            fail(f"axis {axis_name!r} must map exactly 'field' and 'values'")
        values = axis["values"]
        if not isinstance(values, list) or not values:
            fail(f"axis {axis_name!r} needs a non-empty list of values")
        for value in values:
            if value is not None and not isinstance(value, (str, int, float, bool)):
                fail(f"axis {axis_name!r} values must be scalars")
        resolve_path(doc, axis["field"])  # raises PlanError when unreachable
    seeds = doe["seeds"]
    if (
        not isinstance(seeds, list)
        or not seeds
        or not all(_is_int(s) for s in seeds)
    ):
        fail("doe.seeds must be a non-empty list of integers")
    if len(set(seeds)) != len(seeds):
        fail("doe.seeds must not repeat")


def resolve_path(doc: dict, dotted: str):
    """Find the container and final key a dotted field path points at.

    The final key does not have to exist yet (an axis may introduce it), but
    every parent must.  Lists of named mappings are addressed by name.
    """
    if not isinstance(dotted, str) or not dotted:
        raise PlanError(f"field path {dotted!r} must be a dotted string")
    tokens = dotted.split(".")
    node = doc
    trail = []
    for token in tokens[:-1]:
        trail.append(token)
        if isinstance(node, list):
            named = [n for n in node if isinstance(n, dict) and n.get("name") == token]
            if not named:
                raise PlanError(
                    f"field path {dotted!r}: no entry named {token!r} "
                    f"under {'.'.join(trail[:-1]) or 'plan root'}"
                )
            node = named[0]
        elif isinstance(node, dict):
            if token not in node:
                raise PlanError(
                    f"field path {dotted!r}: {'.'.join(trail)} does not exist"
                )
            node = node[token]
        else:
            raise PlanError(
                f"field path {dotted!r}: {'.'.join(trail[:-1])} is not a container"
            )
    last = tokens[-1]
    if isinstance(node, list):
        named = [n for n in node if isinstance(n, dict) and n.get("name") == last]
        if not named:
            raise PlanError(f"field path {dotted!r}: no entry named {last!r}")
        raise PlanError(
            f"field path {dotted!r} points at a whole agent; address one field"
        )
    if not isinstance(node, dict):
        raise PlanError(f"field path {dotted!r}: parent is not a mapping")
    return node, last


def apply_override(doc: dict, dotted: str, value) -> None:
    container, key = resolve_path(doc, dotted)
    container[key] = value
