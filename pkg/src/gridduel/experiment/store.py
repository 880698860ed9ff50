"""Run storage: append-only NDJSON, one file per run, plus an index.

Every run file starts with a ``header`` record (descriptor, agent
interfaces, start timestamp), carries ``reset``/``step``/``round`` records
in execution order, and ends with exactly one ``footer`` record.  A file
without a footer is an aborted attempt and will be redone; a file with one
is immutable - the store refuses to reopen it.

Wall-clock timestamps and operational settings (the plan's ``execution``
block) are the only run-to-run noise, so :meth:`ExperimentStore.canonical_records`
strips them; two runs of the same descriptor must then compare equal, byte
for byte, whatever transport or machine produced them.
"""

from __future__ import annotations

import copy
import json
import threading
import time
from pathlib import Path

from ..errors import StoreError
from ..transport.envelope import canonical_json
from .runs import RunDescriptor


class ExperimentStore:
    def __init__(self, root: str | Path, plan_name: str) -> None:
        self.root = Path(root) / plan_name
        self.runs_dir = self.root / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"
        self._lock = threading.Lock()

    # -- paths and queries ------------------------------------------------

    def run_path(self, run_id: str) -> Path:
        return self.runs_dir / f"{run_id}.ndjson"

    def index(self) -> dict:
        with self._lock:
            return self._read_index()

    def _read_index(self) -> dict:
        try:
            return json.loads(self._index_path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return {}
        except json.JSONDecodeError as exc:
            raise StoreError(f"corrupt index {self._index_path}: {exc}") from exc

    def is_complete(self, run_id: str) -> bool:
        entry = self.index().get(run_id)
        if entry is not None:
            return True
        # index may lag a crash; trust the file's own footer
        path = self.run_path(run_id)
        if not path.exists():
            return False
        records = self.read_run(run_id)
        return bool(records) and records[-1].get("type") == "footer"

    def completed_runs(self) -> list[str]:
        return sorted(self.index())

    def read_run(self, run_id: str) -> list[dict]:
        path = self.run_path(run_id)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StoreError(f"cannot read run {run_id}: {exc}") from exc
        records = []
        for number, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StoreError(
                    f"run {run_id} line {number} is not valid JSON: {exc}"
                ) from exc
        return records

    # -- writing -----------------------------------------------------------

    def open_run(self, descriptor: RunDescriptor, interfaces: dict) -> "RunWriter":
        if self.is_complete(descriptor.run_id):
            raise StoreError(
                f"run {descriptor.run_id} is already complete; refusing to rewrite"
            )
        return RunWriter(self, descriptor, interfaces)

    def _finish(self, run_id: str, entry: dict) -> None:
        with self._lock:
            index = self._read_index()
            index[run_id] = entry
            tmp = self._index_path.with_suffix(".json.tmp")
            tmp.write_text(
                json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            tmp.replace(self._index_path)

    # -- determinism view ---------------------------------------------------

    @staticmethod
    def canonical_records(records: list[dict]) -> list[dict]:
        """Strip wall-clock and operational noise for replay comparison."""
        out = []
        for record in copy.deepcopy(records):
            if record.get("type") == "header":
                record.pop("started_at", None)
                record.get("run", {}).get("plan", {}).pop("execution", None)
            elif record.get("type") == "footer":
                record.pop("finished_at", None)
            out.append(record)
        return out

    def canonical_text(self, run_id: str) -> str:
        return "\n".join(
            canonical_json(record)
            for record in self.canonical_records(self.read_run(run_id))
        )


class RunWriter:
    """Streams one run's records; call :meth:`finish` exactly once."""

    def __init__(
        self, store: ExperimentStore, descriptor: RunDescriptor, interfaces: dict
    ) -> None:
        from .. import __version__

        self._store = store
        self._descriptor = descriptor
        self._path = store.run_path(descriptor.run_id)
        self._file = self._path.open("w", encoding="utf-8")
        self._finished = False
        self._rounds = 0
        self.emit(
            "header",
            run=descriptor.to_dict(),
            interfaces=interfaces,
            package_version=__version__,
            started_at=time.time(),
        )

    def emit(self, type_: str, **fields) -> None:
        if self._finished:
            raise StoreError("run writer already finished")
        if type_ == "round":
            self._rounds += 1
        record = {"type": type_, **fields}
        self._file.write(canonical_json(record) + "\n")

    def finish(self, status: str, **fields) -> None:
        if self._finished:
            raise StoreError("run writer already finished")
        self.emit("footer", status=status, finished_at=time.time(), **fields)
        self._finished = True
        self._file.close()
        self._store._finish(
            self._descriptor.run_id, {"status": status, "rounds": self._rounds}
        )

    def abandon(self) -> None:
        """Close without a footer; the attempt reads as incomplete."""
        if not self._finished:
            self._finished = True
            self._file.close()
