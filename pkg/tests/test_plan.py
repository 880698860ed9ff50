import copy

import pytest

from gridduel.errors import PlanError
from gridduel.experiment import apply_override, load_plan, prepare_plan, resolve_path
from gridduel.experiment.plan import EXECUTION_DEFAULTS


def base_doc():
    return {
        "schema": "gridduel-plan/1",
        "name": "duel-smoke",
        "environment": {"grid": {"seed": 1}, "horizon": 20},
        "agents": [
            {
                "name": "red",
                "role": "attacker",
                "strategy": "random",
                "sensors": ["load/*", "sgen/*"],
                "actuators": ["load/*", "sgen/*"],
            },
            {
                "name": "blue",
                "role": "defender",
                "strategy": "constant",
                "hyperparameters": {"level": 1.0},
                "sensors": ["load/*", "sgen/*", "transformer/*"],
                "actuators": ["load/*", "sgen/*", "transformer/*"],
            },
        ],
    }


def expect_rejection(doc, fragment):
    with pytest.raises(PlanError, match=fragment):
        prepare_plan(doc)


def test_defaults_fill_in():
    plan = prepare_plan(base_doc())
    assert plan["execution"] == EXECUTION_DEFAULTS
    assert plan["doe"] == {"axes": {}, "seeds": [0]}
    red, blue = plan["agents"]
    assert red["workers"] == 1
    assert red["reward"] == {"mu": 1.0, "sigma": 0.05, "offset": 0.0}
    assert red["action_view"] == "continuous"
    assert blue["hyperparameters"] == {"level": 1.0}


def test_discrete_strategy_defaults_to_discrete_view():
    doc = base_doc()
    doc["agents"][0]["strategy"] = "tabular-q"
    plan = prepare_plan(doc)
    assert plan["agents"][0]["action_view"] == "discrete"
    assert plan["agents"][1]["action_view"] == "continuous"


def test_discrete_strategy_rejects_continuous_view():
    doc = base_doc()
    doc["agents"][0]["strategy"] = "tabular-q"
    doc["agents"][0]["action_view"] = "continuous"
    expect_rejection(doc, "discrete-only")


def test_explicit_settings_survive():
    doc = base_doc()
    doc["execution"] = {"rounds": 4, "transport": "socket"}
    doc["doe"] = {"seeds": [7, 9]}
    doc["agents"][0]["reward"] = {"sigma": 0.1}
    plan = prepare_plan(doc)
    assert plan["execution"]["rounds"] == 4
    assert plan["execution"]["transport"] == "socket"
    assert plan["execution"]["timeout"] == 30.0
    assert plan["doe"]["seeds"] == [7, 9]
    assert plan["agents"][0]["reward"] == {"mu": 1.0, "sigma": 0.1, "offset": 0.0}


def test_yaml_round_trip(tmp_path):
    text = """
schema: gridduel-plan/1
name: from-yaml
environment:
  grid: {seed: 3}
  horizon: 10
agents:
  - name: red
    role: attacker
    strategy: random
    sensors: ["load/*"]
    actuators: ["load/*"]
  - name: blue
    role: defender
    strategy: constant
    sensors: ["load/*"]
    actuators: ["load/*"]
doe:
  axes:
    level:
      field: agents.blue.hyperparameters.level
      values: [0.25, 0.75]
  seeds: [1, 2, 3]
"""
    path = tmp_path / "plan.yaml"
    path.write_text(text, encoding="utf-8")
    plan = load_plan(path)
    assert plan["name"] == "from-yaml"
    assert plan["doe"]["axes"]["level"]["values"] == [0.25, 0.75]
    with pytest.raises(PlanError, match="cannot read"):
        load_plan(tmp_path / "absent.yaml")
    bad = tmp_path / "broken.yaml"
    bad.write_text("{not: [valid", encoding="utf-8")
    with pytest.raises(PlanError, match="YAML"):
        load_plan(bad)


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d.pop("schema"), "schema"),
        (lambda d: d.update(schema="gridduel-plan/2"), "schema"),
        (lambda d: d.update(name="no spaces allowed"), "bare token"),
        (lambda d: d.pop("environment"), "environment"),
        (lambda d: d["environment"].update(grid={}), "exactly one"),
        (lambda d: d["environment"].update(grid={"seed": 1, "file": "g.json"}),
         "exactly one"),
        (lambda d: d["environment"]["grid"].update(seed=1.5), "integer"),
        (lambda d: d["environment"].update(horizon=0), "horizon"),
        (lambda d: d["environment"].update(horizon=True), "horizon"),
        (lambda d: d["environment"].update(constraints={"v_floor": 0.9}),
         "unknown constraint"),
        (lambda d: d["environment"].update(solver={"tol": -1e-8}), "tol"),
        (lambda d: d.update(agents=d["agents"][:1]), "two agents"),
        (lambda d: d["agents"][0].update(role="observer"), "role"),
        (lambda d: d["agents"][0].update(strategy="deep-rl"), "unknown"),
        (lambda d: d["agents"][0].update(sensors=[]), "sensors"),
        (lambda d: d["agents"][0].update(actuators=["load/*", 3]), "actuators"),
        (lambda d: d["agents"][0].update(workers=0), "workers"),
        (lambda d: d["agents"][0].update(reward={"mu": 1.0, "shape": "bell"}),
         "reward"),
        (lambda d: d["agents"][0].update(reward={"sigma": 0.0}), "sigma"),
        (lambda d: d["agents"][1].update(name="red"), "unique"),
        (lambda d: d["agents"][1].update(role="attacker"), "defender"),
        (lambda d: d.update(execution={"rounds": 0}), "rounds"),
        (lambda d: d.update(execution={"retries": 3}), "execution"),
        (lambda d: d.update(execution={"transport": "carrier-pigeon"}),
         "transport"),
        (lambda d: d.update(doe={"seeds": [1, 1]}), "repeat"),
        (lambda d: d.update(doe={"seeds": [1.5]}), "integers"),
        (lambda d: d.update(doe={"seeds": []}), "seeds"),
        (lambda d: d.update(doe={"axes": {"a": {"field": "environment.horizon"}}}),
         "values"),
        (lambda d: d.update(
            doe={"axes": {"a": {"field": "environment.horizon", "values": []}}}),
         "non-empty"),
        (lambda d: d.update(
            doe={"axes": {"a": {"field": "agents.green.workers", "values": [1]}}}),
         "green"),
    ],
)
def test_rejections(mutate, fragment):
    doc = base_doc()
    mutate(doc)
    expect_rejection(doc, fragment)


def test_resolve_path_walks_named_lists():
    plan = prepare_plan(base_doc())
    container, key = resolve_path(plan, "agents.blue.hyperparameters.level")
    assert key == "level"
    assert container is plan["agents"][1]["hyperparameters"]
    container, key = resolve_path(plan, "environment.horizon")
    assert container is plan["environment"]
    # the final key may be new - an axis is allowed to introduce it
    container, key = resolve_path(plan, "agents.red.hyperparameters.epsilon_start")
    assert key == "epsilon_start"

    with pytest.raises(PlanError, match="whole agent"):
        resolve_path(plan, "agents.red")
    with pytest.raises(PlanError, match="does not exist"):
        resolve_path(plan, "environment.grid.depth.more")
    with pytest.raises(PlanError, match="not a container"):
        resolve_path(plan, "environment.horizon.deeper.still")


def test_apply_override_reaches_named_agent():
    plan = prepare_plan(base_doc())
    before = copy.deepcopy(plan)
    apply_override(plan, "agents.blue.hyperparameters.level", 0.25)
    apply_override(plan, "environment.horizon", 5)
    assert plan["agents"][1]["hyperparameters"]["level"] == 0.25
    assert plan["environment"]["horizon"] == 5
    # nothing else moved
    plan["agents"][1]["hyperparameters"]["level"] = 1.0
    plan["environment"]["horizon"] = 20
    assert plan == before
