"""Turns a store full of runs into three flat CSV files.

* ``coins.csv`` - the defender's (and attacker's) end-of-episode balance
  per run and round: the headline score of the duel.
* ``rewards.csv`` - per-round mean shaped reward per agent: the learning
  signal's trajectory.
* ``action_mass.csv`` - per actuator, the mean normalized deviation from
  its neutral position across every recorded step: which levers an agent
  actually pulls.  Scaling actuators are neutral at full output (the base
  case); tap actuators are neutral mid-range.

Only runs that finished ``ok`` contribute.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .store import ExperimentStore


def _deviation(wire_space: dict, kind: str, value) -> float:
    if "box" in wire_space:
        lows = wire_space["box"]["low"]
        highs = wire_space["box"]["high"]
        devs = []
        for v, lo, hi in zip(value, lows, highs):
            devs.append(abs(v - hi) / (hi - lo) if hi > lo else 0.0)
        return sum(devs) / len(devs) if devs else 0.0
    n = wire_space["discrete"]
    if n <= 1:
        return 0.0
    if kind == "tap":
        mid = (n - 1) / 2
        return abs(value - mid) / mid if mid else 0.0
    return abs(value - (n - 1)) / (n - 1)


def write_reports(store_root, plan_name: str, out_dir) -> dict[str, Path]:
    store = ExperimentStore(store_root, plan_name)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    coin_rows = []
    reward_rows = []
    mass_sums: dict[tuple[str, str], list[float]] = {}  # (agent, actuator) -> [sum, count]

    index = store.index()
    for run_id in sorted(index):
        if index[run_id].get("status") != "ok":
            continue
        interfaces = {}
        for record in store.read_run(run_id):
            rtype = record.get("type")
            if rtype == "header":
                interfaces = record.get("interfaces", {})
            elif rtype == "round":
                coin_rows.append([
                    run_id, record["round"],
                    f"{record['defender_coins']:.6f}",
                    f"{record['attacker_coins']:.6f}",
                    int(record["attacker_won"]),
                ])
                for agent in sorted(record["mean_rewards"]):
                    reward_rows.append([
                        run_id, record["round"], agent,
                        f"{record['mean_rewards'][agent]:.9f}",
                    ])
            elif rtype == "step":
                for agent, setpoints in record["setpoints"].items():
                    table = interfaces.get(agent, {})
                    spaces = dict(
                        (aid, wire) for aid, wire in table.get("actuators", [])
                    )
                    kinds = table.get("kinds", {})
                    for actuator_id, value in setpoints.items():
                        wire = spaces.get(actuator_id)
                        if wire is None:
                            continue
                        dev = _deviation(wire, kinds.get(actuator_id, "scaling"), value)
                        entry = mass_sums.setdefault((agent, actuator_id), [0.0, 0.0])
                        entry[0] += dev
                        entry[1] += 1

    paths = {
        "coins": out / "coins.csv",
        "rewards": out / "rewards.csv",
        "action_mass": out / "action_mass.csv",
    }
    with paths["coins"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run_id", "round", "defender_coins", "attacker_coins",
                         "attacker_won"])
        writer.writerows(coin_rows)
    with paths["rewards"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["run_id", "round", "agent", "mean_reward"])
        writer.writerows(reward_rows)
    with paths["action_mass"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["agent", "actuator_id", "action_mass", "samples"])
        for (agent, actuator_id) in sorted(mass_sums):
            total, count = mass_sums[(agent, actuator_id)]
            writer.writerow([
                agent, actuator_id, f"{total / count:.9f}", int(count),
            ])
    return paths
