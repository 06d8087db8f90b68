import json
import uuid

import pytest

from helpers import make_warehouse, random_movement_op, seed_basic, system_submit
from ims.engine import (
    SYSTEM_ACTOR,
    Engine,
    StockEvent,
    canonical_json,
    replay,
    snapshot_to_json,
)
from ims.errors import StoreError
from ims.store import EVENTS_FILE, LOCK_FILE, SNAPSHOT_FILE, FileStore, MemoryStore

import random


def make_event(seq, kind="WAREHOUSE_CREATED", body=None):
    if body is None:
        body = make_warehouse(f"W{seq}").to_json()
    return StockEvent(seq, str(uuid.uuid4()), SYSTEM_ACTOR, "2024-11-30T12:00:00Z", kind, body)


@pytest.fixture
def store(tmp_path):
    s = FileStore(tmp_path / "data")
    yield s
    s.close()


class TestAppendAndIterate:
    def test_round_trip(self, store):
        events = [make_event(1), make_event(2)]
        for e in events:
            store.append_event(e)
        assert list(store.iterate_events()) == events
        assert list(store.iterate_events(from_seq=2)) == events[1:]
        assert store.last_seq() == 2

    def test_gap_refused(self, store):
        store.append_event(make_event(1))
        with pytest.raises(StoreError) as err:
            store.append_event(make_event(3))
        assert err.value.code == "SEQUENCE_GAP"

    def test_log_is_one_json_object_per_line(self, store):
        store.append_event(make_event(1))
        raw = (store.data_dir / EVENTS_FILE).read_text()
        assert raw.endswith("\n")
        doc = json.loads(raw)
        assert doc["seq"] == 1

    def test_survives_reopen(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        store.append_event(make_event(1))
        store.close()
        store = FileStore(path)
        assert store.last_seq() == 1
        store.append_event(make_event(2))
        assert [e.seq for e in store.iterate_events()] == [1, 2]
        store.close()


class TestTailRecovery:
    def test_truncated_tail_discarded(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        store.append_event(make_event(1))
        store.append_event(make_event(2))
        store.close()
        log = path / EVENTS_FILE
        data = log.read_bytes()
        log.write_bytes(data[:-20])

        store = FileStore(path)
        assert store.last_seq() == 1
        store.append_event(make_event(2))
        assert [e.seq for e in store.iterate_events()] == [1, 2]
        store.close()

    def test_missing_final_newline_repaired(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        store.append_event(make_event(1))
        store.close()
        log = path / EVENTS_FILE
        log.write_bytes(log.read_bytes().rstrip(b"\n"))

        store = FileStore(path)
        assert store.last_seq() == 1
        store.append_event(make_event(2))
        assert [e.seq for e in store.iterate_events()] == [1, 2]
        store.close()

    def test_garbage_tail_discarded(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        store.append_event(make_event(1))
        store.close()
        log = path / EVENTS_FILE
        with open(log, "ab") as fh:
            fh.write(b'{"seq": 2, "broken')

        store = FileStore(path)
        assert store.last_seq() == 1
        store.close()

    def test_midfile_corruption_fatal_and_names_seq(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        for seq in (1, 2, 3):
            store.append_event(make_event(seq))
        store.close()
        log = path / EVENTS_FILE
        lines = log.read_bytes().splitlines(keepends=True)
        lines[1] = b"not json\n"
        log.write_bytes(b"".join(lines))

        with pytest.raises(StoreError) as err:
            FileStore(path)
        assert err.value.code == "CORRUPT_LOG"
        assert "seq 2" in str(err.value)

    def test_midfile_gap_fatal(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        for seq in (1, 2, 3):
            store.append_event(make_event(seq))
        store.close()
        log = path / EVENTS_FILE
        lines = log.read_bytes().splitlines(keepends=True)
        log.write_bytes(lines[0] + lines[2])

        with pytest.raises(StoreError) as err:
            FileStore(path)
        assert err.value.code == "CORRUPT_LOG"

    def test_empty_log_file(self, tmp_path):
        path = tmp_path / "data"
        path.mkdir()
        (path / EVENTS_FILE).write_bytes(b"")
        store = FileStore(path)
        assert store.last_seq() == 0
        store.close()


class TestSnapshots:
    def test_round_trip(self, store):
        doc = {"seq": 0, "warehouses": [], "items": [], "categories": [],
               "users": [], "stock": [], "appliedOpIds": []}
        store.write_snapshot(doc)
        assert store.read_snapshot() == doc

    def test_write_is_atomic_rename(self, store):
        store.write_snapshot({"seq": 0})
        assert not (store.data_dir / (SNAPSHOT_FILE + ".tmp")).exists()

    def test_corrupt_snapshot_flagged(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        (path / SNAPSHOT_FILE).write_text("{nope")
        with pytest.raises(StoreError) as err:
            store.read_snapshot()
        assert err.value.code == "CORRUPT_SNAPSHOT"
        store.close()

    def test_snapshot_ahead_of_log_flagged(self, tmp_path):
        path = tmp_path / "data"
        engine = Engine(FileStore(path))
        seed_basic(engine, warehouses=1, items=1)
        engine.write_snapshot()
        engine._store.close()

        log = path / EVENTS_FILE
        lines = log.read_bytes().splitlines(keepends=True)
        log.write_bytes(lines[0])
        store = FileStore(path)
        with pytest.raises(StoreError) as err:
            store.load_state()
        assert err.value.code == "SNAPSHOT_LOG_MISMATCH"
        store.close()


class TestLoadState:
    def test_empty_dir(self, store):
        state = store.load_state()
        assert state.seq == 0

    def test_load_equals_replay(self, tmp_path):
        rng = random.Random(99)
        engine = Engine(FileStore(tmp_path / "data"), snapshot_every=7)
        warehouse_ids, item_ids = seed_basic(engine, warehouses=2, items=3)
        for _ in range(40):
            engine.submit(random_movement_op(rng, warehouse_ids, item_ids, SYSTEM_ACTOR))
        live = canonical_json(snapshot_to_json(engine.snapshot))
        engine._store.close()

        store = FileStore(tmp_path / "data")
        loaded = store.load_state()
        assert canonical_json(snapshot_to_json(loaded)) == live
        pure = replay(store.iterate_events())
        assert canonical_json(snapshot_to_json(pure)) == live
        store.close()

    def test_load_without_snapshot(self, tmp_path):
        path = tmp_path / "data"
        store = FileStore(path)
        store.append_event(make_event(1))
        store.close()
        store = FileStore(path)
        state = store.load_state()
        assert state.seq == 1
        assert len(state.catalog.warehouses) == 1
        store.close()


class TestLocking:
    def test_second_writer_refused(self, tmp_path):
        path = tmp_path / "data"
        first = FileStore(path)
        with pytest.raises(StoreError) as err:
            FileStore(path)
        assert err.value.code == "LOCKED"
        first.close()
        second = FileStore(path)  # released lock can be retaken
        second.close()

    def test_lock_can_be_disabled(self, tmp_path):
        path = tmp_path / "data"
        first = FileStore(path)
        reader = FileStore(path, lock=False)
        assert reader.last_seq() == 0
        reader.close()
        first.close()

    def test_lock_file_records_pid(self, tmp_path):
        import os

        path = tmp_path / "data"
        store = FileStore(path)
        assert (path / LOCK_FILE).read_text() == str(os.getpid())
        store.close()


class TestMemoryStore:
    def test_same_interface(self):
        store = MemoryStore()
        store.append_event(make_event(1))
        with pytest.raises(StoreError):
            store.append_event(make_event(5))
        store.write_snapshot({"seq": 0, "warehouses": [], "items": [], "categories": [],
                              "users": [], "stock": [], "appliedOpIds": []})
        assert store.read_snapshot()["seq"] == 0
        assert store.load_state().seq == 1
