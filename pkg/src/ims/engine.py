"""Event-sourced core: every mutation is a sequenced StockEvent.

State lives in an immutable Snapshot (catalog + per-warehouse stock counts).
`apply_event` is the single pure transition function shared by the live
engine, boot-time replay and client-side merge, which is what makes replay
and multi-client convergence byte-exact. The Engine serializes writers,
assigns sequence numbers and enforces idempotency by client-chosen opId.
"""

from __future__ import annotations

import json
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Iterable

from . import auth
from .codec import UUID_RE
from .errors import StoreError
from .model import (
    Catalog,
    Category,
    Item,
    StockLevel,
    User,
    Warehouse,
    validate_category,
    validate_item,
    validate_user,
    validate_warehouse,
)

MOVEMENT_KINDS = ("RECEIVE", "ISSUE", "TRANSFER", "ADJUST")
ENTITY_KINDS = (
    "WAREHOUSE_CREATED",
    "WAREHOUSE_UPDATED",
    "WAREHOUSE_DELETED",
    "ITEM_CREATED",
    "ITEM_UPDATED",
    "ITEM_DELETED",
    "CATEGORY_CREATED",
    "CATEGORY_UPDATED",
    "CATEGORY_DELETED",
    "USER_CREATED",
    "USER_UPDATED",
)
EVENT_KINDS = MOVEMENT_KINDS + ENTITY_KINDS

# action consulted in the permission matrix for each event kind
KIND_ACTIONS = {
    "RECEIVE": auth.MOVE_STOCK,
    "ISSUE": auth.MOVE_STOCK,
    "TRANSFER": auth.MOVE_STOCK,
    "ADJUST": auth.ADJUST_STOCK,
    "WAREHOUSE_CREATED": auth.WRITE_CATALOG,
    "WAREHOUSE_UPDATED": auth.WRITE_CATALOG,
    "WAREHOUSE_DELETED": auth.WRITE_CATALOG,
    "ITEM_CREATED": auth.WRITE_CATALOG,
    "ITEM_UPDATED": auth.WRITE_CATALOG,
    "ITEM_DELETED": auth.WRITE_CATALOG,
    "CATEGORY_CREATED": auth.WRITE_CATALOG,
    "CATEGORY_UPDATED": auth.WRITE_CATALOG,
    "CATEGORY_DELETED": auth.WRITE_CATALOG,
    "USER_CREATED": auth.MANAGE_USERS,
    "USER_UPDATED": auth.MANAGE_USERS,
}

OPID_WINDOW = 10_000

# reserved actor id for CLI/bootstrap operations; bypasses the role matrix
SYSTEM_ACTOR = "00000000-0000-4000-8000-000000000000"

UNIQUENESS_CODES = frozenset({"SKU_TAKEN", "NAME_TAKEN", "USERNAME_TAKEN"})


@dataclass(frozen=True)
class StockEvent:
    seq: int
    op_id: str
    actor: str
    ts: str
    kind: str
    body: dict


def event_to_json(e: StockEvent) -> dict:
    return {"seq": e.seq, "opId": e.op_id, "actor": e.actor, "ts": e.ts, "kind": e.kind, "body": e.body}


def event_from_json(obj: dict) -> StockEvent:
    return StockEvent(
        seq=int(obj["seq"]),
        op_id=obj["opId"],
        actor=obj["actor"],
        ts=obj["ts"],
        kind=obj["kind"],
        body=obj["body"],
    )


@dataclass(frozen=True)
class Violation:
    """Why an event was refused; details carry entity validation codes."""

    code: str
    details: tuple[str, ...] = ()


def canonical_json(doc) -> str:
    """One byte representation per value, for equality checks and hashing."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


@dataclass(frozen=True)
class Snapshot:
    """State after applying events 1..seq. Never mutated in place."""

    seq: int = 0
    catalog: Catalog = field(default_factory=Catalog)
    stock: dict = field(default_factory=dict)  # (warehouseId, itemId) -> quantity > 0
    applied_op_ids: dict = field(default_factory=dict)  # opId -> seq, insertion-ordered window


def snapshot_to_json(s: Snapshot) -> dict:
    cat = s.catalog
    return {
        "seq": s.seq,
        "catalog": {
            "warehouses": [cat.warehouses[k].to_json() for k in sorted(cat.warehouses)],
            "items": [cat.items[k].to_json() for k in sorted(cat.items)],
            "categories": [cat.categories[k].to_json() for k in sorted(cat.categories)],
            "users": [cat.users[k].to_json() for k in sorted(cat.users)],
        },
        "stock": [
            {"warehouseId": w, "itemId": i, "quantity": s.stock[(w, i)]}
            for (w, i) in sorted(s.stock)
        ],
        "appliedOpIds": [
            {"opId": op_id, "seq": seq}
            for op_id, seq in sorted(s.applied_op_ids.items(), key=lambda kv: kv[1])
        ],
    }


def snapshot_from_json(obj: dict) -> Snapshot:
    cat_obj = obj.get("catalog", {})
    catalog = Catalog(
        warehouses={w["id"]: Warehouse.from_json(w) for w in cat_obj.get("warehouses", [])},
        items={i["id"]: Item.from_json(i) for i in cat_obj.get("items", [])},
        categories={c["id"]: Category.from_json(c) for c in cat_obj.get("categories", [])},
        users={u["id"]: User.from_json(u) for u in cat_obj.get("users", [])},
    )
    stock = {(row["warehouseId"], row["itemId"]): int(row["quantity"]) for row in obj.get("stock", [])}
    applied: dict[str, int] = {}
    for row in sorted(obj.get("appliedOpIds", []), key=lambda r: r["seq"]):
        applied[row["opId"]] = int(row["seq"])
    return Snapshot(seq=int(obj.get("seq", 0)), catalog=catalog, stock=stock, applied_op_ids=applied)


def apply_event(s: Snapshot, e: StockEvent) -> tuple[Snapshot, Violation | None]:
    """Pure transition: returns the next snapshot, or (s, violation) unchanged.

    Precondition e.seq == s.seq + 1 is a caller bug, not a domain violation,
    so it raises instead of returning a violation.
    """
    if e.seq != s.seq + 1:
        raise StoreError(
            f"event seq {e.seq} does not follow snapshot seq {s.seq}", code="SEQUENCE_GAP"
        )
    if e.op_id in s.applied_op_ids:
        return s, Violation("VALIDATION_FAILED", ("DUPLICATE_OPID",))
    if not isinstance(e.body, dict):
        return s, Violation("VALIDATION_FAILED", ("BAD_BODY",))
    try:
        if e.kind in MOVEMENT_KINDS:
            next_s, violation = _apply_movement(s, e)
        elif e.kind in _ENTITY_HANDLERS:
            next_s, violation = _apply_entity(s, e)
        else:
            return s, Violation("VALIDATION_FAILED", ("UNKNOWN_KIND:" + str(e.kind),))
    except (KeyError, TypeError, ValueError, AttributeError):
        return s, Violation("VALIDATION_FAILED", ("BAD_BODY",))
    if violation is not None:
        return s, violation
    window = dict(next_s.applied_op_ids)
    window[e.op_id] = e.seq
    while len(window) > OPID_WINDOW:
        window.pop(next(iter(window)))
    return replace(next_s, seq=e.seq, applied_op_ids=window), None


def _live_warehouse(s: Snapshot, wid) -> bool:
    w = s.catalog.warehouses.get(wid)
    return w is not None and not w.deleted


def _live_item(s: Snapshot, iid) -> bool:
    i = s.catalog.items.get(iid)
    return i is not None and not i.deleted


def _apply_movement(s: Snapshot, e: StockEvent) -> tuple[Snapshot, Violation | None]:
    body = e.body
    item_id = body["itemId"]
    if not _live_item(s, item_id):
        return s, Violation("UNKNOWN_REFERENCE", ("itemId",))
    if e.kind == "TRANSFER":
        warehouse_ids = [body["fromWarehouseId"], body["toWarehouseId"]]
    else:
        warehouse_ids = [body["warehouseId"]]
    for wid in warehouse_ids:
        if not _live_warehouse(s, wid):
            return s, Violation("UNKNOWN_REFERENCE", ("warehouseId",))

    if e.kind == "ADJUST":
        qty = body["newQuantity"]
        if type(qty) is not int or qty < 0:
            return s, Violation("VALIDATION_FAILED", ("BAD_QUANTITY",))
    else:
        qty = body["quantity"]
        if type(qty) is not int or qty < 1:
            return s, Violation("VALIDATION_FAILED", ("BAD_QUANTITY",))

    stock = dict(s.stock)

    def bump(wid: str, delta: int) -> int:
        key = (wid, item_id)
        level = stock.get(key, 0) + delta
        if level:
            stock[key] = level
        else:
            stock.pop(key, None)
        return level

    if e.kind == "RECEIVE":
        bump(warehouse_ids[0], qty)
    elif e.kind == "ISSUE":
        if stock.get((warehouse_ids[0], item_id), 0) - qty < 0:
            return s, Violation("REJECTED_NEGATIVE", ())
        bump(warehouse_ids[0], -qty)
    elif e.kind == "TRANSFER":
        if stock.get((warehouse_ids[0], item_id), 0) - qty < 0:
            return s, Violation("REJECTED_NEGATIVE", ())
        bump(warehouse_ids[0], -qty)
        bump(warehouse_ids[1], qty)
    else:  # ADJUST
        key = (warehouse_ids[0], item_id)
        if qty:
            stock[key] = qty
        else:
            stock.pop(key, None)
    return replace(s, stock=stock), None


_ENTITY_HANDLERS = {
    "WAREHOUSE": ("warehouses", Warehouse.from_json, validate_warehouse, Catalog.with_warehouse),
    "ITEM": ("items", Item.from_json, validate_item, Catalog.with_item),
    "CATEGORY": ("categories", Category.from_json, validate_category, Catalog.with_category),
    "USER": ("users", User.from_json, validate_user, Catalog.with_user),
}
_ENTITY_HANDLERS = {
    f"{prefix}_{verb}": (prefix, *spec)
    for prefix, spec in _ENTITY_HANDLERS.items()
    for verb in ("CREATED", "UPDATED", "DELETED")
    if not (prefix == "USER" and verb == "DELETED")  # users deactivate, never delete
}


def _apply_entity(s: Snapshot, e: StockEvent) -> tuple[Snapshot, Violation | None]:
    prefix, table_name, from_json, validate, with_entity = _ENTITY_HANDLERS[e.kind]
    table = getattr(s.catalog, table_name)
    verb = e.kind.rsplit("_", 1)[1]

    if verb == "DELETED":
        current = table.get(e.body["id"])
        expected = e.body["expectedVersion"]
        if current is None or current.deleted:
            return s, Violation("UNKNOWN_REFERENCE", (table_name,))
        if type(expected) is not int:
            return s, Violation("VALIDATION_FAILED", ("BAD_BODY",))
        if expected != current.version:
            return s, Violation("VERSION_CONFLICT", (f"stored version {current.version}",))
        catalog = with_entity(s.catalog, replace(current, deleted=True, version=current.version + 1))
        if e.kind == "CATEGORY_DELETED":
            for item in catalog.items.values():
                if item.category_id == current.id and not item.deleted:
                    catalog = catalog.with_item(
                        replace(item, category_id=None, version=item.version + 1)
                    )
        return replace(s, catalog=catalog), None

    entity = from_json(e.body)
    if verb == "CREATED":
        if not isinstance(entity.id, str) or not UUID_RE.match(entity.id):
            return s, Violation("VALIDATION_FAILED", ("BAD_ID",))
        if entity.id in table:
            return s, Violation("VALIDATION_FAILED", ("ID_TAKEN",))
        if entity.version != 1 or getattr(entity, "deleted", False):
            return s, Violation("VALIDATION_FAILED", ("BAD_VERSION",))
    else:  # UPDATED
        current = table.get(entity.id)
        expected = e.body["expectedVersion"]
        if current is None or getattr(current, "deleted", False):
            return s, Violation("UNKNOWN_REFERENCE", (table_name,))
        if type(expected) is not int:
            return s, Violation("VALIDATION_FAILED", ("BAD_BODY",))
        if expected != current.version:
            return s, Violation("VERSION_CONFLICT", (f"stored version {current.version}",))
        if entity.version != current.version + 1:
            return s, Violation("VALIDATION_FAILED", ("BAD_VERSION",))
        if getattr(entity, "deleted", False):
            return s, Violation("VALIDATION_FAILED", ("BAD_BODY",))

    codes = validate(s.catalog, entity)
    if codes:
        return s, Violation("VALIDATION_FAILED", tuple(codes))
    return replace(s, catalog=with_entity(s.catalog, entity)), None


def replay(events: Iterable[StockEvent], base: Snapshot | None = None) -> Snapshot:
    """Fold apply_event over an accepted log; any refusal means corruption."""
    s = base if base is not None else Snapshot()
    for e in events:
        try:
            s, violation = apply_event(s, e)
        except StoreError as exc:
            raise StoreError(f"replay of seq {e.seq}: {exc}", code="CORRUPT_LOG") from exc
        if violation is not None:
            raise StoreError(
                f"committed event seq {e.seq} fails to re-apply: {violation.code}",
                code="CORRUPT_LOG",
            )
    return s


def stock_levels(
    s: Snapshot, warehouse_id: str | None = None, item_id: str | None = None
) -> list[StockLevel]:
    rows = [
        StockLevel(w, i, q)
        for (w, i), q in s.stock.items()
        if q > 0
        and (warehouse_id is None or w == warehouse_id)
        and (item_id is None or i == item_id)
    ]
    rows.sort(key=lambda r: (r.warehouse_id, r.item_id))
    return rows


@dataclass(frozen=True)
class OpRequest:
    """Unsequenced mutation request; body becomes the event body verbatim."""

    op_id: str
    actor: str
    kind: str
    body: dict


@dataclass(frozen=True)
class OpResult:
    status: str  # APPLIED | DUPLICATE | REJECTED
    seq: int | None = None
    violation: Violation | None = None

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.seq is not None:
            out["seq"] = self.seq
        if self.violation is not None:
            out["violation"] = self.violation.code
            out["details"] = list(self.violation.details)
        return out


class Engine:
    """Single-writer front door over the store.

    Reads may grab `snapshot` without locking: it is replaced wholesale,
    never mutated, so a reader always sees one consistent state.
    """

    def __init__(self, store, *, snapshot_every: int = 1000, now_fn: Callable[[], float] | None = None):
        self._store = store
        self._snapshot_every = snapshot_every
        self._now_fn = now_fn or time.time
        self._lock = threading.Lock()
        self._snapshot: Snapshot = store.load_state()
        # recorded rejections so a retry gets the same answer; not part of
        # replayed state, so kept off the snapshot
        self._rejections: OrderedDict[str, OpResult] = OrderedDict()

    @property
    def snapshot(self) -> Snapshot:
        return self._snapshot

    def now(self) -> float:
        return self._now_fn()

    def submit(self, request: OpRequest) -> OpResult:
        with self._lock:
            return self._submit_locked(request)

    def _submit_locked(self, req: OpRequest) -> OpResult:
        if not isinstance(req.op_id, str) or not UUID_RE.match(req.op_id):
            return OpResult("REJECTED", violation=Violation("VALIDATION_FAILED", ("BAD_OPID",)))
        s = self._snapshot
        recorded_seq = s.applied_op_ids.get(req.op_id)
        if recorded_seq is not None:
            return OpResult("DUPLICATE", seq=recorded_seq)
        if req.op_id in self._rejections:
            return self._rejections[req.op_id]
        if s.seq > OPID_WINDOW:
            # opId may have aged out of the window; the log is the authority
            for e in self._store.iterate_events():
                if e.op_id == req.op_id:
                    return OpResult("DUPLICATE", seq=e.seq)

        violation = self._authorize(s, req)
        if violation is not None:
            return self._record_rejection(req.op_id, OpResult("REJECTED", violation=violation))

        event = StockEvent(
            seq=s.seq + 1,
            op_id=req.op_id,
            actor=req.actor,
            ts=self._now_iso(),
            kind=req.kind,
            body=req.body,
        )
        next_s, violation = apply_event(s, event)
        if violation is not None:
            return self._record_rejection(req.op_id, OpResult("REJECTED", violation=violation))
        self._store.append_event(event)  # storage failure propagates; nothing recorded
        self._snapshot = next_s
        if self._snapshot_every and next_s.seq % self._snapshot_every == 0:
            self.write_snapshot()
        return OpResult("APPLIED", seq=event.seq)

    def _authorize(self, s: Snapshot, req: OpRequest) -> Violation | None:
        action = KIND_ACTIONS.get(req.kind)
        if action is None:
            return Violation("VALIDATION_FAILED", ("UNKNOWN_KIND:" + str(req.kind),))
        if req.actor == SYSTEM_ACTOR:
            return None
        user = s.catalog.users.get(req.actor)
        if user is None or not user.active:
            return Violation("FORBIDDEN", ("UNKNOWN_ACTOR",))
        if not auth.authorize(user.role, action):
            return Violation("FORBIDDEN", (req.kind,))
        return None

    def _record_rejection(self, op_id: str, result: OpResult) -> OpResult:
        self._rejections[op_id] = result
        if len(self._rejections) > OPID_WINDOW:
            self._rejections.popitem(last=False)
        return result

    def _now_iso(self) -> str:
        return datetime.fromtimestamp(int(self._now_fn()), tz=timezone.utc).strftime(
            "%Y-%m-%dT%H:%M:%SZ"
        )

    def events_since(self, after_seq: int, limit: int) -> tuple[list[StockEvent], bool]:
        """Committed events with seq > after_seq, at most limit, plus a more-flag."""
        events: list[StockEvent] = []
        has_more = False
        for e in self._store.iterate_events(from_seq=after_seq + 1):
            if len(events) == limit:
                has_more = True
                break
            events.append(e)
        return events, has_more

    def write_snapshot(self) -> None:
        self._store.write_snapshot(snapshot_to_json(self._snapshot))
