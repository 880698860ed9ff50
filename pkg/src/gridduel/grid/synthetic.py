"""Deterministic synthetic city distribution grids.

``generate_city_grid(seed)`` is a pure function from an integer seed to a
mid-sized network with a fixed composition:

* one external-grid slack bus feeding two HV buses,
* four HV/MV transformers in two parallel pairs (one pair per HV bus), each
  pair feeding one MV main busbar; the two main busbars share a tie line,
* eight radial MV feeders carrying 22 industry loads, 5 wind farms and 18
  MV/LV substations,
* each MV/LV substation serves one aggregated-subgrid load plus one rooftop
  PV cluster on its LV bus,
* two conventional plants sitting directly on the MV main busbars.

Totals are fixed: 40 loads (18 subgrid + 22 industry, cos phi 0.97) and
25 generators whose nameplate ratings sum to exactly 51,000 kW
(2 x 8,500 plant + 5 x 5,000 wind + 18 x 500 PV).

Seeded draws decide load sizes, feeder composition and segment lengths.
After drawing, the generator calibrates itself: segment lengths shrink
geometrically until the no-attack base case (every scaling at 1.0, taps
neutral) solves with all bus voltages inside [0.96, 1.04] pu, and branch
ratings are assigned so no base-case loading exceeds 80 percent.
"""

from __future__ import annotations

import math
import random

from ..errors import GridModelError
from .model import Bus, GridModel, Injection, Line, Transformer
from .powerflow import solve

# Electrical constants (per unit on the 1 MVA system base).
MV_KV = 10.0
MV_R_PER_KM = 0.12 / (MV_KV**2)  # 0.12 ohm/km cable
MV_X_PER_KM = 0.11 / (MV_KV**2)
MV_B_PER_KM = 1e-4

HVMV_RATING = 10.0  # MVA, per transformer (two in parallel per pair)
MVLV_RATING = 2.5
PLANT_KW = 8500.0
WIND_KW = 5000.0
PV_KW = 500.0

LOAD_COS_PHI = 0.97
PLANT_COS_PHI = 0.8
PV_COS_PHI = 0.9
WIND_COS_PHI = 1.0

FEEDERS = ("a0", "a1", "a2", "a3", "b0", "b1", "b2", "b3")

VOLT_CAL_LOW = 0.96
VOLT_CAL_HIGH = 1.04


def _impedance(z_pu: float, x_over_r: float) -> tuple[float, float]:
    r = z_pu / math.sqrt(1.0 + x_over_r**2)
    return r, r * x_over_r


def _mv_line(line_id: str, from_bus: str, to_bus: str, km: float) -> Line:
    return Line(
        line_id=line_id,
        from_bus=from_bus,
        to_bus=to_bus,
        r_pu=MV_R_PER_KM * km,
        x_pu=MV_X_PER_KM * km,
        b_pu=MV_B_PER_KM * km,
        s_max_pu=1.0,  # placeholder, assigned after calibration
        length_km=km,
    )


def generate_city_grid(seed: int) -> GridModel:
    """Build the synthetic city grid for ``seed`` (pure and deterministic)."""
    rng = random.Random(seed)
    model = GridModel(slack_bus="ext")

    # -- transmission interface ------------------------------------------
    model.buses["ext"] = Bus("ext", "hv", 110.0)
    for side in ("a", "b"):
        model.buses[f"hv-{side}"] = Bus(f"hv-{side}", "hv", 110.0)
        model.buses[f"mvm-{side}"] = Bus(f"mvm-{side}", "mv", MV_KV)
        model.lines[f"line-hv-{side}"] = Line(
            line_id=f"line-hv-{side}",
            from_bus="ext",
            to_bus=f"hv-{side}",
            r_pu=1e-5,
            x_pu=5e-5,
            b_pu=0.0,
            s_max_pu=60.0,
            length_km=3.0,
        )
        r, x = _impedance(0.06 / HVMV_RATING, x_over_r=10.0)
        for k in range(2):
            tid = f"xf-grid-{side}{k}"
            model.transformers[tid] = Transformer(
                transformer_id=tid,
                hv_bus=f"hv-{side}",
                lv_bus=f"mvm-{side}",
                r_pu=r,
                x_pu=x,
                s_max_pu=HVMV_RATING,
                category="hvmv",
            )
    model.lines["line-tie"] = _mv_line("line-tie", "mvm-a", "mvm-b", 2.0)
    model.lines["line-tie"].s_max_pu = 8.0

    # -- element size draws ------------------------------------------------
    subgrid_raw = [rng.randint(1100, 1500) for _ in range(18)]
    industry_raw = [rng.randint(1200, 1800) for _ in range(22)]
    target_total = rng.randint(55_500, 57_500)
    scale = target_total / (sum(subgrid_raw) + sum(industry_raw))
    subgrid_kw = [round(v * scale) for v in subgrid_raw]
    industry_kw = [round(v * scale) for v in industry_raw]

    for n, side in enumerate(("a", "b")):
        model.injections[f"sgen-plant-{n}"] = Injection(
            injection_id=f"sgen-plant-{n}",
            bus=f"mvm-{side}",
            kind="sgen",
            category="plant",
            p_nominal_kw=PLANT_KW,
            cos_phi=PLANT_COS_PHI,
        )

    # -- feeder composition -----------------------------------------------
    slots: list[tuple[str, int]] = (
        [("industry", i) for i in range(22)]
        + [("substation", i) for i in range(18)]
        + [("wind", i) for i in range(5)]
    )
    rng.shuffle(slots)
    feeders: dict[str, list[tuple[str, int]]] = {f: [] for f in FEEDERS}
    for pos, slot in enumerate(slots):
        feeders[FEEDERS[pos % len(FEEDERS)]].append(slot)

    lv_r, lv_x = _impedance(0.06 / MVLV_RATING, x_over_r=5.0)
    lengths: dict[str, float] = {}
    for feeder, items in feeders.items():
        prev = f"mvm-{feeder[0]}"
        for hop, (kind, idx) in enumerate(items):
            bus_id = f"mv-{feeder}-{hop:02d}"
            model.buses[bus_id] = Bus(bus_id, "mv", MV_KV)
            line_id = f"line-{feeder}-{hop:02d}"
            lengths[line_id] = rng.uniform(1.0, 3.0)
            model.lines[line_id] = _mv_line(line_id, prev, bus_id, lengths[line_id])
            prev = bus_id
            if kind == "industry":
                eid = f"load-ind-{idx:02d}"
                model.injections[eid] = Injection(
                    eid, bus_id, "load", "industry", float(industry_kw[idx]), LOAD_COS_PHI
                )
            elif kind == "wind":
                eid = f"sgen-wind-{idx}"
                model.injections[eid] = Injection(
                    eid, bus_id, "sgen", "wind", WIND_KW, WIND_COS_PHI
                )
            else:  # substation: MV/LV transformer + subgrid load + PV cluster
                lv_id = f"lv-{idx:02d}"
                model.buses[lv_id] = Bus(lv_id, "lv", 0.4)
                tid = f"xf-dist-{idx:02d}"
                model.transformers[tid] = Transformer(
                    transformer_id=tid,
                    hv_bus=bus_id,
                    lv_bus=lv_id,
                    r_pu=lv_r,
                    x_pu=lv_x,
                    s_max_pu=MVLV_RATING,
                    category="mvlv",
                )
                load_id = f"load-sub-{idx:02d}"
                model.injections[load_id] = Injection(
                    load_id, lv_id, "load", "subgrid", float(subgrid_kw[idx]), LOAD_COS_PHI
                )
                pv_id = f"sgen-pv-{idx:02d}"
                model.injections[pv_id] = Injection(
                    pv_id, lv_id, "sgen", "pv", PV_KW, PV_COS_PHI
                )

    # -- calibration: shrink feeder segments until the base case is tight --
    solution = None
    for _ in range(16):
        solution = solve(model)
        if solution.converged:
            live = [v for v in solution.v_mag.values() if v > 0.0]
            if min(live) >= VOLT_CAL_LOW and max(live) <= VOLT_CAL_HIGH:
                break
        for line_id, km in lengths.items():
            lengths[line_id] = km * 0.8
            line = model.lines[line_id]
            line.length_km = lengths[line_id]
            line.r_pu = MV_R_PER_KM * lengths[line_id]
            line.x_pu = MV_X_PER_KM * lengths[line_id]
            line.b_pu = MV_B_PER_KM * lengths[line_id]
    else:
        raise GridModelError(f"seed {seed}: base case failed to calibrate")

    # -- ratings: generous against the base case, binding against abuse ----
    down_load, down_gen = _downstream_apparent(model)
    for line_id, line in model.lines.items():
        if not line_id.startswith("line-") or line_id in ("line-tie",):
            continue
        if line_id.startswith("line-hv-"):
            continue
        base = abs(solution.branch_flows[line_id].s_from_pu)
        structural = max(down_load[line_id], down_gen[line_id])
        line.s_max_pu = max(1.35 * base, 0.65 * structural, 1.2)

    model.validate()
    return model


def _downstream_apparent(model: GridModel) -> tuple[dict[str, float], dict[str, float]]:
    """Per MV feeder line: total downstream load / generation apparent power.

    Feeders are radial, so a depth-first walk from each main busbar visits
    every segment once; substations contribute their LV elements.
    """
    children: dict[str, list[tuple[str, str]]] = {}
    for line_id, line in model.lines.items():
        if line_id.startswith("line-hv-") or line_id == "line-tie":
            continue
        children.setdefault(line.from_bus, []).append((line_id, line.to_bus))

    lv_of = {t.hv_bus: t.lv_bus for t in model.transformers.values() if t.category == "mvlv"}
    s_at: dict[str, tuple[float, float]] = {}
    for inj in model.injections.values():
        p = inj.p_nominal_kw / 1000.0
        s = p * math.sqrt(1.0 + inj.tan_phi**2)
        load, gen = s_at.get(inj.bus, (0.0, 0.0))
        if inj.kind == "load":
            s_at[inj.bus] = (load + s, gen)
        else:
            s_at[inj.bus] = (load, gen + s)

    down_load: dict[str, float] = {}
    down_gen: dict[str, float] = {}

    def walk(bus: str) -> tuple[float, float]:
        load, gen = s_at.get(bus, (0.0, 0.0))
        if bus in lv_of:
            lv_load, lv_gen = s_at.get(lv_of[bus], (0.0, 0.0))
            load, gen = load + lv_load, gen + lv_gen
        for line_id, child in children.get(bus, []):
            c_load, c_gen = walk(child)
            down_load[line_id] = c_load
            down_gen[line_id] = c_gen
            load, gen = load + c_load, gen + c_gen
        return load, gen

    for side in ("a", "b"):
        walk(f"mvm-{side}")
    return down_load, down_gen
