"""Durable persistence: append-only JSON-lines event log plus atomic snapshots.

FileStore is the real thing; MemoryStore backs unit tests with the same
interface. Crash recovery rule: a truncated final log line is discarded with
a warning, corruption anywhere else is fatal. Snapshots are written to a temp
file and renamed into place so a crash never leaves a partial snapshot.
"""

from __future__ import annotations

import fcntl
import json
import logging
import os
from pathlib import Path
from typing import Iterator

from . import engine
from .errors import StoreError

log = logging.getLogger(__name__)

EVENTS_FILE = "events.log"
SNAPSHOT_FILE = "snapshot.json"
LOCK_FILE = "lock"


def _load_state(store) -> engine.Snapshot:
    """Latest snapshot (or empty) plus replay of the log events beyond it."""
    doc = store.read_snapshot()
    if doc is None:
        base = engine.Snapshot()
    else:
        try:
            base = engine.snapshot_from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise StoreError(f"snapshot does not parse: {exc}", code="CORRUPT_SNAPSHOT") from exc
    if base.seq > store.last_seq():
        raise StoreError(
            f"snapshot seq {base.seq} exceeds log seq {store.last_seq()}",
            code="SNAPSHOT_LOG_MISMATCH",
        )
    return engine.replay(store.iterate_events(from_seq=base.seq + 1), base=base)


class MemoryStore:
    """In-process store for tests and simulated clients."""

    def __init__(self) -> None:
        self._events: list[engine.StockEvent] = []
        self._snapshot_doc: dict | None = None

    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else 0

    def append_event(self, e: engine.StockEvent) -> None:
        if e.seq != self.last_seq() + 1:
            raise StoreError(
                f"append seq {e.seq} does not follow {self.last_seq()}", code="SEQUENCE_GAP"
            )
        self._events.append(e)

    def iterate_events(self, from_seq: int = 1) -> Iterator[engine.StockEvent]:
        for e in self._events:
            if e.seq >= from_seq:
                yield e

    def write_snapshot(self, doc: dict) -> None:
        self._snapshot_doc = json.loads(engine.canonical_json(doc))

    def read_snapshot(self) -> dict | None:
        return self._snapshot_doc

    def load_state(self) -> engine.Snapshot:
        return _load_state(self)

    def close(self) -> None:
        pass


class FileStore:
    """JSON-lines event log and snapshot file under one data directory.

    Takes an exclusive lock file so only one writer process can own the
    directory at a time.
    """

    def __init__(self, data_dir, *, lock: bool = True) -> None:
        self._dir = Path(data_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._events_path = self._dir / EVENTS_FILE
        self._snapshot_path = self._dir / SNAPSHOT_FILE
        self._lock_handle = None
        self._append_handle = None
        if lock:
            self._acquire_lock()
        self._last_seq = self._recover_tail()

    @property
    def data_dir(self) -> Path:
        return self._dir

    def _acquire_lock(self) -> None:
        handle = open(self._dir / LOCK_FILE, "w")
        try:
            fcntl.flock(handle.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            handle.close()
            raise StoreError(
                f"data dir {self._dir} is locked by another process", code="LOCKED"
            ) from None
        handle.write(str(os.getpid()))
        handle.flush()
        self._lock_handle = handle

    def _recover_tail(self) -> int:
        """Validate the log, drop a half-written final line, return last seq."""
        if not self._events_path.exists():
            return 0
        data = self._events_path.read_bytes()
        offset = 0
        expected = 1
        last_seq = 0
        while offset < len(data):
            newline = data.find(b"\n", offset)
            complete = newline != -1
            end = newline + 1 if complete else len(data)
            line = data[offset:end].rstrip(b"\n")
            try:
                event = engine.event_from_json(json.loads(line.decode("utf-8")))
            except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
                if end == len(data):
                    # torn final write from a crash, safe to drop
                    log.warning("discarding corrupt trailing log line: %s", exc)
                    with open(self._events_path, "r+b") as fh:
                        fh.truncate(offset)
                    break
                raise StoreError(
                    f"corrupt event log at seq {expected} (byte {offset}): {exc}",
                    code="CORRUPT_LOG",
                ) from exc
            if event.seq != expected:
                # a parseable event with the wrong seq is never a torn write
                raise StoreError(
                    f"corrupt event log at seq {expected} (byte {offset}): "
                    f"found seq {event.seq}",
                    code="CORRUPT_LOG",
                )
            if not complete:
                # content intact, only the newline was lost in a crash
                with open(self._events_path, "ab") as fh:
                    fh.write(b"\n")
            last_seq = event.seq
            expected = event.seq + 1
            offset = end
        return last_seq

    def last_seq(self) -> int:
        return self._last_seq

    def append_event(self, e: engine.StockEvent) -> None:
        if e.seq != self._last_seq + 1:
            raise StoreError(
                f"append seq {e.seq} does not follow {self._last_seq}", code="SEQUENCE_GAP"
            )
        line = json.dumps(engine.event_to_json(e), separators=(",", ":"), ensure_ascii=True)
        try:
            if self._append_handle is None:
                self._append_handle = open(self._events_path, "a", encoding="utf-8")
            self._append_handle.write(line + "\n")
            self._append_handle.flush()
            os.fsync(self._append_handle.fileno())
        except OSError as exc:
            raise StoreError(f"cannot append to event log: {exc}", code="IO_FAILURE") from exc
        self._last_seq = e.seq

    def iterate_events(self, from_seq: int = 1) -> Iterator[engine.StockEvent]:
        if not self._events_path.exists():
            return
        with open(self._events_path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
        expected = 1
        for index, raw in enumerate(lines):
            try:
                event = engine.event_from_json(json.loads(raw))
            except (ValueError, KeyError, TypeError) as exc:
                if index == len(lines) - 1:
                    log.warning("ignoring corrupt trailing log line: %s", exc)
                    return
                raise StoreError(
                    f"corrupt event log at seq {expected} (line {index + 1}): {exc}",
                    code="CORRUPT_LOG",
                ) from exc
            if event.seq != expected:
                raise StoreError(
                    f"log line {index + 1} has seq {event.seq}, expected {expected}",
                    code="CORRUPT_LOG",
                )
            expected += 1
            if event.seq >= from_seq:
                yield event

    def write_snapshot(self, doc: dict) -> None:
        tmp = self._snapshot_path.with_name(SNAPSHOT_FILE + ".tmp")
        try:
            with open(tmp, "w", encoding="ascii") as fh:
                fh.write(engine.canonical_json(doc))
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self._snapshot_path)
            dir_fd = os.open(self._dir, os.O_RDONLY)
            try:
                os.fsync(dir_fd)
            finally:
                os.close(dir_fd)
        except OSError as exc:
            raise StoreError(f"cannot write snapshot: {exc}", code="IO_FAILURE") from exc

    def read_snapshot(self) -> dict | None:
        if not self._snapshot_path.exists():
            return None
        try:
            with open(self._snapshot_path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except (OSError, ValueError) as exc:
            raise StoreError(f"unreadable snapshot: {exc}", code="CORRUPT_SNAPSHOT") from exc

    def load_state(self) -> engine.Snapshot:
        return _load_state(self)

    def close(self) -> None:
        if self._append_handle is not None:
            self._append_handle.close()
            self._append_handle = None
        if self._lock_handle is not None:
            fcntl.flock(self._lock_handle.fileno(), fcntl.LOCK_UN)
            self._lock_handle.close()
            self._lock_handle = None
