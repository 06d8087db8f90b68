"""Shared test plumbing: independent oracles, fixture builders and workload
generators. Oracles deliberately reimplement the arithmetic they check rather
than calling back into the package."""

from __future__ import annotations

import math
import os
import random
import uuid

from ims import auth
from ims.engine import SYSTEM_ACTOR, Engine, OpRequest
from ims.geo import GeoPoint
from ims.model import Category, Item, User, Warehouse, new_entity_id
from ims.store import MemoryStore


def scale(n: int, floor: int = 1) -> int:
    """Iteration count honoring IMS_TEST_SCALE (used by the coverage run)."""
    factor = float(os.environ.get("IMS_TEST_SCALE", "1"))
    return max(floor, int(n * factor))


# one PBKDF2 derivation shared by every test user keeps the suite fast
PASSWORD = "warehouse-pw-1"
PASSWORD_RECORD = auth.derive_password(PASSWORD, salt=b"0123456789abcdef")


def ean13_check_oracle(prefix: str) -> int:
    """Brute-force oracle: the digit making the weighted sum divisible by 10."""
    for digit in range(10):
        total = 0
        for position, ch in enumerate(prefix + str(digit), start=1):
            weight = 3 if position % 2 == 0 else 1
            total += int(ch) * weight
        if total % 10 == 0:
            return digit
    raise AssertionError("no digit satisfies the mod-10 rule")


def haversine_oracle_km(a: GeoPoint, b: GeoPoint) -> float:
    """Independent great-circle distance using the atan2 form."""
    radius_km = 6371.0088
    phi1 = math.radians(a.latitude_deg)
    phi2 = math.radians(b.latitude_deg)
    dphi = math.radians(b.latitude_deg - a.latitude_deg)
    dlam = math.radians(b.longitude_deg - a.longitude_deg)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    h = min(1.0, max(0.0, h))
    return 2 * radius_km * math.atan2(math.sqrt(h), math.sqrt(1 - h))


def nearest_oracle(user: GeoPoint, warehouses, max_radius_m: float):
    """Linear scan picking min (distance, id); None when out of radius."""
    best = None
    for w in warehouses:
        d_km = haversine_oracle_km(user, w.location)
        if d_km * 1000.0 > max_radius_m:
            continue
        key = (d_km, w.id)
        if best is None or key < best[0]:
            best = (key, w)
    if best is None:
        return None
    return best[1], best[0][0]


def make_admin(username: str = "root") -> User:
    return User(
        id=new_entity_id(),
        username=username,
        display_name="Admin " + username,
        role="ADMIN",
        password_hash=PASSWORD_RECORD,
    )


def make_employee(username: str = "picker") -> User:
    return User(
        id=new_entity_id(),
        username=username,
        display_name="Employee " + username,
        role="EMPLOYEE",
        password_hash=PASSWORD_RECORD,
    )


def system_submit(engine: Engine, kind: str, body: dict) -> int:
    """Apply one op as the system actor; returns the assigned seq."""
    result = engine.submit(
        OpRequest(op_id=str(uuid.uuid4()), actor=SYSTEM_ACTOR, kind=kind, body=body)
    )
    assert result.status == "APPLIED", (kind, result)
    return result.seq


def make_engine(store=None) -> Engine:
    return Engine(store if store is not None else MemoryStore())


def make_warehouse(name: str, lat: float = 52.0, lon: float = 21.0) -> Warehouse:
    return Warehouse(id=new_entity_id(), name=name, location=GeoPoint(lat, lon))


def make_item(name: str, sku: str, **kwargs) -> Item:
    return Item(id=new_entity_id(), name=name, sku=sku, **kwargs)


def make_category(name: str) -> Category:
    return Category(id=new_entity_id(), name=name)


def seed_basic(engine: Engine, warehouses: int = 2, items: int = 3):
    """Warehouses and items applied through the engine; returns (w_ids, i_ids)."""
    warehouse_ids = []
    for n in range(warehouses):
        w = make_warehouse(f"Warehouse {n + 1}", lat=50.0 + n, lon=19.0 + n)
        system_submit(engine, "WAREHOUSE_CREATED", w.to_json())
        warehouse_ids.append(w.id)
    item_ids = []
    for n in range(items):
        i = make_item(f"Part {n + 1}", f"P-{n + 1:03d}")
        system_submit(engine, "ITEM_CREATED", i.to_json())
        item_ids.append(i.id)
    return warehouse_ids, item_ids


def random_movement_op(rng: random.Random, warehouse_ids, item_ids, actor: str) -> OpRequest:
    """One random movement request: mostly valid, some deliberate underflows."""
    kind = rng.choice(["RECEIVE", "RECEIVE", "RECEIVE", "ISSUE", "ISSUE", "TRANSFER", "ADJUST"])
    item_id = rng.choice(item_ids)
    if kind == "TRANSFER":
        body = {
            "fromWarehouseId": rng.choice(warehouse_ids),
            "toWarehouseId": rng.choice(warehouse_ids),
            "itemId": item_id,
            "quantity": rng.randint(1, 20),
        }
    elif kind == "ADJUST":
        body = {
            "warehouseId": rng.choice(warehouse_ids),
            "itemId": item_id,
            "newQuantity": rng.randint(0, 40),
        }
    else:
        body = {
            "warehouseId": rng.choice(warehouse_ids),
            "itemId": item_id,
            "quantity": rng.randint(1, 20),
        }
    return OpRequest(op_id=str(uuid.UUID(int=rng.getrandbits(128), version=4)), actor=actor,
                     kind=kind, body=body)


class StockModel:
    """Naive reference bookkeeping for movement workloads."""

    def __init__(self) -> None:
        self.quantities: dict[tuple[str, str], int] = {}

    def total(self, item_id: str) -> int:
        return sum(q for (w, i), q in self.quantities.items() if i == item_id)

    def would_underflow(self, op: OpRequest) -> bool:
        body = op.body
        if op.kind == "ISSUE":
            key = (body["warehouseId"], body["itemId"])
            return self.quantities.get(key, 0) < body["quantity"]
        if op.kind == "TRANSFER":
            key = (body["fromWarehouseId"], body["itemId"])
            return self.quantities.get(key, 0) < body["quantity"]
        return False

    def apply(self, op: OpRequest) -> None:
        body = op.body
        if op.kind == "RECEIVE":
            key = (body["warehouseId"], body["itemId"])
            self.quantities[key] = self.quantities.get(key, 0) + body["quantity"]
        elif op.kind == "ISSUE":
            key = (body["warehouseId"], body["itemId"])
            self.quantities[key] = self.quantities.get(key, 0) - body["quantity"]
        elif op.kind == "TRANSFER":
            src = (body["fromWarehouseId"], body["itemId"])
            dst = (body["toWarehouseId"], body["itemId"])
            self.quantities[src] = self.quantities.get(src, 0) - body["quantity"]
            self.quantities[dst] = self.quantities.get(dst, 0) + body["quantity"]
        else:
            key = (body["warehouseId"], body["itemId"])
            self.quantities[key] = body["newQuantity"]
        self.quantities = {k: q for k, q in self.quantities.items() if q != 0}
