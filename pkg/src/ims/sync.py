"""Offline-first synchronization: batch push of queued ops, cursor pull of events.

The server stays authoritative. Clients queue intents while offline, push them
in order, then pull committed events and fold them with the same apply_event
the server uses, so every client that reaches the same cursor holds the same
state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .codec import UUID_RE
from .engine import Engine, OpRequest, OpResult, Snapshot, StockEvent, replay
from .errors import SyncError

MAX_BATCH_OPS = 500
MAX_PULL_LIMIT = 1000
DEFAULT_PULL_LIMIT = 500


@dataclass(frozen=True)
class PushBatch:
    client_id: str
    ops: tuple[OpRequest, ...]


@dataclass(frozen=True)
class PushOutcome:
    results: tuple[OpResult, ...]
    cursor: int  # highest committed seq after the batch


@dataclass(frozen=True)
class PullPage:
    events: tuple[StockEvent, ...]
    next_cursor: int
    has_more: bool


def push(engine: Engine, batch: PushBatch) -> PushOutcome:
    """Apply ops in batch order; one rejection never aborts the rest."""
    if not isinstance(batch.client_id, str) or not UUID_RE.match(batch.client_id):
        raise SyncError("clientId must be a UUID", code="VALIDATION_FAILED")
    if not batch.ops:
        raise SyncError("batch has no ops", code="VALIDATION_FAILED")
    if len(batch.ops) > MAX_BATCH_OPS:
        raise SyncError(f"batch exceeds {MAX_BATCH_OPS} ops", code="BATCH_TOO_LARGE")
    # distinctness applies to well-formed opIds; malformed ops fail per-op
    op_ids = [op.op_id for op in batch.ops if isinstance(op.op_id, str) and UUID_RE.match(op.op_id)]
    if len(set(op_ids)) != len(op_ids):
        raise SyncError("opIds within a batch must be distinct", code="VALIDATION_FAILED")
    results = tuple(engine.submit(op) for op in batch.ops)
    return PushOutcome(results=results, cursor=engine.snapshot.seq)


def pull(engine: Engine, cursor: int, limit: int = DEFAULT_PULL_LIMIT) -> PullPage:
    """Committed events with seq > cursor, in order, at most limit per page."""
    if type(cursor) is not int or cursor < 0:
        raise SyncError("cursor must be an integer >= 0", code="VALIDATION_FAILED")
    if type(limit) is not int or not 1 <= limit <= MAX_PULL_LIMIT:
        raise SyncError(f"limit must be 1..{MAX_PULL_LIMIT}", code="VALIDATION_FAILED")
    committed = engine.snapshot.seq
    if cursor > committed:
        raise SyncError(
            f"cursor {cursor} is ahead of committed seq {committed}; resync from 0",
            code="CURSOR_AHEAD",
        )
    events, has_more = engine.events_since(cursor, limit)
    next_cursor = events[-1].seq if events else cursor
    return PullPage(events=tuple(events), next_cursor=next_cursor, has_more=has_more)


def client_merge(local: Snapshot, page: PullPage) -> Snapshot:
    """Fold a pulled page into client state with the server's own semantics."""
    if not page.events:
        return local
    if page.events[0].seq != local.seq + 1:
        raise SyncError(
            f"page starts at seq {page.events[0].seq}, expected {local.seq + 1}",
            code="GAP_DETECTED",
        )
    return replay(page.events, base=local)
