from collections import Counter

import pytest

from gridduel.grid.model import GridModel
from gridduel.grid.powerflow import solve
from gridduel.grid.synthetic import generate_city_grid

SEEDS = (1, 2, 5, 9, 13)


@pytest.fixture(scope="module")
def grid_one() -> GridModel:
    return generate_city_grid(1)


def test_composition_is_fixed(grid_one):
    kinds = Counter(i.kind_path for i in grid_one.injections.values())
    assert kinds == {
        "load/subgrid": 18,
        "load/industry": 22,
        "sgen/plant": 2,
        "sgen/wind": 5,
        "sgen/pv": 18,
    }
    trafos = Counter(t.category for t in grid_one.transformers.values())
    assert trafos == {"hvmv": 4, "mvlv": 18}
    assert len(grid_one.transformers) == 22


def test_generator_nameplates_sum_to_51_mw(grid_one):
    total = sum(
        i.p_nominal_kw for i in grid_one.injections.values() if i.kind == "sgen"
    )
    assert total == 51_000.0


def test_all_power_factors(grid_one):
    for inj in grid_one.injections.values():
        expected = {
            "load": 0.97,
            "sgen": {"plant": 0.8, "pv": 0.9, "wind": 1.0}.get(inj.category),
        }[inj.kind]
        if inj.kind == "load":
            assert inj.cos_phi == 0.97
        else:
            assert inj.cos_phi == expected


def test_same_seed_same_grid_different_seed_different_grid():
    assert generate_city_grid(4).to_dict() == generate_city_grid(4).to_dict()
    assert generate_city_grid(4).to_dict() != generate_city_grid(5).to_dict()


@pytest.mark.parametrize("seed", SEEDS)
def test_base_case_is_healthy(seed):
    model = generate_city_grid(seed)
    model.validate()
    sol = solve(model)
    assert sol.converged
    live = [v for v in sol.v_mag.values() if v > 0.0]
    assert len(live) == len(model.buses)  # nothing islanded at birth
    assert min(live) >= 0.95
    assert max(live) <= 1.05
    assert sol.max_loading() < 0.8


@pytest.mark.parametrize("seed", SEEDS)
def test_full_load_no_generation_breaks_a_constraint(seed):
    model = generate_city_grid(seed)
    for inj in model.injections.values():
        inj.scaling = 1.0 if inj.kind == "load" else 0.0
    sol = solve(model)
    overloaded = [b for b, f in sol.branch_flows.items() if f.loading > 1.0]
    sagging = [b for b, v in sol.v_mag.items() if 0.0 < v < 0.85]
    assert not sol.converged or overloaded or sagging


def test_mv_feeders_are_radial(grid_one):
    # Every feeder bus is reached by exactly one feeder segment.
    heads = Counter()
    for line in grid_one.lines.values():
        if line.line_id.startswith(("line-hv", "line-tie")):
            continue
        heads[line.to_bus] += 1
    feeder_buses = [b for b in grid_one.buses if b.startswith("mv-")]
    assert sorted(heads) == sorted(feeder_buses)
    assert set(heads.values()) == {1}


def test_every_substation_serves_one_subgrid_load_and_one_pv(grid_one):
    lv_buses = [b for b in grid_one.buses if b.startswith("lv-")]
    assert len(lv_buses) == 18
    for lv in lv_buses:
        local = [i for i in grid_one.injections.values() if i.bus == lv]
        assert sorted(i.kind_path for i in local) == ["load/subgrid", "sgen/pv"]


def test_parallel_transformer_pairs_share_endpoints(grid_one):
    pairs = {"a": [], "b": []}
    for t in grid_one.transformers.values():
        if t.category == "hvmv":
            pairs[t.hv_bus[-1]].append(t)
    for side, ts in pairs.items():
        assert len(ts) == 2
        assert {t.hv_bus for t in ts} == {f"hv-{side}"}
        assert {t.lv_bus for t in ts} == {f"mvm-{side}"}


def test_serialization_round_trip_of_a_full_city(grid_one):
    doc = grid_one.to_dict()
    assert GridModel.from_dict(doc).to_dict() == doc
