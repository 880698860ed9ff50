import json

import pytest

from gridduel.errors import StoreError
from gridduel.experiment import (
    ExperimentStore,
    component_seed,
    generate_runs,
    prepare_plan,
    run_identity,
)

from test_plan import base_doc


def sweep_doc():
    doc = base_doc()
    doc["doe"] = {
        "axes": {
            "level": {
                "field": "agents.blue.hyperparameters.level",
                "values": [0.0, 1.0],
            },
            "mu": {
                "field": "agents.red.reward.mu",
                "values": [0.95, 1.0, 1.05],
            },
        },
        "seeds": [11, 12, 13, 14, 15],
    }
    return doc


class TestRunGeneration:
    def test_full_factorial_count_and_uniqueness(self):
        runs = generate_runs(prepare_plan(sweep_doc()))
        assert len(runs) == 2 * 3 * 5
        ids = [run.run_id for run in runs]
        assert len(set(ids)) == 30
        assert all(len(rid) == 12 for rid in ids)
        assert all(int(rid, 16) >= 0 for rid in ids)

    def test_ids_are_stable_across_regeneration(self):
        first = [r.run_id for r in generate_runs(prepare_plan(sweep_doc()))]
        second = [r.run_id for r in generate_runs(prepare_plan(sweep_doc()))]
        assert first == second

    def test_overrides_are_applied_per_point(self):
        runs = generate_runs(prepare_plan(sweep_doc()))
        for run in runs:
            assert run.plan["agents"][1]["hyperparameters"]["level"] == run.point["level"]
            assert run.plan["agents"][0]["reward"]["mu"] == run.point["mu"]
        # axes iterate sorted by name, seeds innermost
        assert [r.seed for r in runs[:5]] == [11, 12, 13, 14, 15]
        assert runs[0].point == {"level": 0.0, "mu": 0.95}
        assert runs[5].point == {"level": 0.0, "mu": 1.0}
        assert runs[-1].point == {"level": 1.0, "mu": 1.05}

    def test_id_depends_on_every_identity_input(self):
        base = run_identity("planA", {"x": 1}, 0)
        assert run_identity("planB", {"x": 1}, 0) != base
        assert run_identity("planA", {"x": 2}, 0) != base
        assert run_identity("planA", {"x": 1}, 1) != base
        assert run_identity("planA", {"x": 1}, 0) == base

    def test_descriptor_round_trip(self):
        run = generate_runs(prepare_plan(sweep_doc()))[0]
        clone = type(run).from_dict(run.to_dict())
        assert clone == run

    def test_no_axes_means_one_run_per_seed(self):
        doc = base_doc()
        doc["doe"] = {"seeds": [4, 5]}
        runs = generate_runs(prepare_plan(doc))
        assert len(runs) == 2
        assert all(run.point == {} for run in runs)


class TestComponentSeeds:
    def test_names_get_independent_streams(self):
        seeds = {component_seed(7, name) for name in ("red", "blue", "grid", "noise")}
        assert len(seeds) == 4

    def test_master_seed_matters(self):
        assert component_seed(7, "red") != component_seed(8, "red")

    def test_stable(self):
        assert component_seed(7, "red") == component_seed(7, "red")

    def test_strategy_seed_varies_by_worker(self):
        run = generate_runs(prepare_plan(base_doc()))[0]
        assert run.strategy_seed("red", 0) != run.strategy_seed("red", 1)
        assert run.strategy_seed("red", 0) != run.strategy_seed("blue", 0)
        assert run.strategy_seed("red", 0) == run.strategy_seed("red", 0)


@pytest.fixture()
def store(tmp_path):
    return ExperimentStore(tmp_path, "duel-smoke")


@pytest.fixture()
def descriptor():
    return generate_runs(prepare_plan(base_doc()))[0]


INTERFACES = {"red": {"sensors": [], "actuators": [], "kinds": {}}}


class TestStore:
    def test_lifecycle(self, store, descriptor):
        assert not store.is_complete(descriptor.run_id)
        writer = store.open_run(descriptor, INTERFACES)
        writer.emit("reset", round=0, instance=0, readings={})
        writer.emit("round", round=0, defender_coins=10_000.0)
        writer.finish("ok", winner="defender")

        assert store.is_complete(descriptor.run_id)
        assert store.completed_runs() == [descriptor.run_id]
        assert store.index()[descriptor.run_id] == {"status": "ok", "rounds": 1}

        records = store.read_run(descriptor.run_id)
        assert [r["type"] for r in records] == ["header", "reset", "round", "footer"]
        header, footer = records[0], records[-1]
        assert header["run"]["run_id"] == descriptor.run_id
        assert header["interfaces"] == INTERFACES
        assert "started_at" in header and "finished_at" in footer
        assert footer["status"] == "ok" and footer["winner"] == "defender"

    def test_refuses_to_rewrite_a_complete_run(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.finish("ok")
        with pytest.raises(StoreError, match="refusing"):
            store.open_run(descriptor, INTERFACES)

    def test_failed_runs_are_complete_too(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.finish("failed", error="boom")
        assert store.is_complete(descriptor.run_id)
        assert store.index()[descriptor.run_id]["status"] == "failed"

    def test_abandoned_run_reads_as_incomplete_and_can_be_redone(
        self, store, descriptor
    ):
        writer = store.open_run(descriptor, INTERFACES)
        writer.emit("reset", round=0, instance=0, readings={})
        writer.abandon()
        assert not store.is_complete(descriptor.run_id)
        assert store.run_path(descriptor.run_id).exists()
        redo = store.open_run(descriptor, INTERFACES)
        redo.finish("ok")
        assert store.is_complete(descriptor.run_id)

    def test_footer_counts_even_when_index_is_lost(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.finish("ok")
        (store.root / "index.json").unlink()
        assert store.is_complete(descriptor.run_id)
        assert store.completed_runs() == []  # the index really is gone

    def test_writer_refuses_use_after_finish(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.finish("ok")
        with pytest.raises(StoreError, match="finished"):
            writer.emit("step")
        with pytest.raises(StoreError, match="finished"):
            writer.finish("ok")

    def test_corrupt_lines_are_reported_with_position(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.finish("ok")
        path = store.run_path(descriptor.run_id)
        path.write_text(path.read_text() + "{oops\n", encoding="utf-8")
        with pytest.raises(StoreError, match="line 3"):
            store.read_run(descriptor.run_id)

    def test_canonical_records_strip_clock_and_execution(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.emit("round", round=0)
        writer.finish("ok")
        records = store.canonical_records(store.read_run(descriptor.run_id))
        assert "started_at" not in records[0]
        assert "execution" not in records[0]["run"]["plan"]
        assert "finished_at" not in records[-1]
        # raw records keep them
        raw = store.read_run(descriptor.run_id)
        assert "started_at" in raw[0]
        assert "execution" in raw[0]["run"]["plan"]

    def test_canonical_text_ignores_transport_settings(self, tmp_path, descriptor):
        import copy

        store_a = ExperimentStore(tmp_path / "a", "duel-smoke")
        store_b = ExperimentStore(tmp_path / "b", "duel-smoke")
        other = copy.deepcopy(descriptor)
        other.plan["execution"]["transport"] = "socket"
        other.plan["execution"]["max_parallel"] = 8
        for st, desc in ((store_a, descriptor), (store_b, other)):
            writer = st.open_run(desc, INTERFACES)
            writer.emit("reset", round=0, instance=0, readings={"red": {"s": [0.5]}})
            writer.finish("ok", winner="defender")
        assert store_a.canonical_text(descriptor.run_id) == store_b.canonical_text(
            other.run_id
        )

    def test_corrupt_index_raises(self, store, descriptor):
        (store.root / "index.json").write_text("not json", encoding="utf-8")
        with pytest.raises(StoreError, match="corrupt index"):
            store.index()

    def test_records_are_one_json_object_per_line(self, store, descriptor):
        writer = store.open_run(descriptor, INTERFACES)
        writer.emit("step", round=0, instance=0, step=0, readings={})
        writer.finish("ok")
        for line in store.run_path(descriptor.run_id).read_text().splitlines():
            doc = json.loads(line)
            assert list(doc) == sorted(doc)  # canonical key order
