"""Operator command line: serve the API, add users, seed demo data, print labels,
and verify that the event log and snapshot agree.

Commands that mutate state open the data directory directly through the same
engine the service uses, so they produce exactly the events an API call would.
The exclusive directory lock means they refuse to run while a service holds
the same data dir.
"""

from __future__ import annotations

import argparse
import getpass
import os
import random
import signal
import sys
import uuid
from pathlib import Path

import uvicorn

from . import auth
from .api import create_app
from .codec import ItemLabel, StockOpLabel, ean13_check_digit, encode_payload
from .engine import (
    SYSTEM_ACTOR,
    Engine,
    OpRequest,
    canonical_json,
    replay,
    snapshot_to_json,
)
from .errors import ImsError
from .geo import DEFAULT_RADIUS_M, GeoPoint
from .model import Category, Item, User, Warehouse, new_entity_id
from .service import Service, ServiceConfig
from .store import FileStore


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ImsError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ims", description="inventory management service administration"
    )
    parser.add_argument(
        "--data-dir", default=None, help="data directory (env IMS_DATA_DIR, default ./data)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service until interrupted")
    serve.add_argument("--listen", default=None, help="host:port (default 127.0.0.1:8080)")
    serve.add_argument("--secret-file", default=None, help="token signing secret path")
    serve.add_argument("--token-ttl-seconds", type=int, default=None)
    serve.add_argument("--nearest-radius-m", type=float, default=None)
    serve.add_argument("--cors-origin", default=None, help="origin allowed to call the API")
    serve.set_defaults(func=cmd_serve)

    user = sub.add_parser("user", help="manage user accounts")
    user_sub = user.add_subparsers(dest="user_command", required=True)
    user_add = user_sub.add_parser("add", help="create a user account")
    user_add.add_argument("username")
    user_add.add_argument("--role", choices=["ADMIN", "EMPLOYEE"], required=True)
    user_add.add_argument("--display-name", default=None)
    user_add.add_argument("--password", default=None, help="omit to be prompted")
    user_add.set_defaults(func=cmd_user_add)

    seed = sub.add_parser("seed", help="load a deterministic demo fixture")
    seed.add_argument("--size", choices=["small", "demo"], default="demo")
    seed.set_defaults(func=cmd_seed)

    label = sub.add_parser("label", help="print a scannable label payload")
    which = label.add_mutually_exclusive_group(required=True)
    which.add_argument("--item-id", default=None)
    which.add_argument("--sku", default=None)
    label.add_argument("--op", choices=["RECEIVE", "ISSUE"], default=None)
    label.add_argument("--warehouse", default=None)
    label.add_argument("--qty", type=int, default=1)
    label.set_defaults(func=cmd_label)

    verify = sub.add_parser("verify-log", help="replay the log and compare with the snapshot")
    verify.set_defaults(func=cmd_verify_log)
    return parser


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("IMS_DATA_DIR") or "data")


def _split_listen(listen: str) -> tuple[str, int]:
    host, sep, port = listen.rpartition(":")
    if not sep or not host:
        raise ImsError(f"listen must be host:port, got {listen!r}", code="VALIDATION_FAILED")
    try:
        return host, int(port)
    except ValueError:
        raise ImsError(f"listen port must be a number, got {port!r}", code="VALIDATION_FAILED") from None


def cmd_serve(args) -> int:
    secret_file = args.secret_file or os.environ.get("IMS_SECRET_FILE")
    config = ServiceConfig(
        data_dir=_data_dir(args),
        listen=args.listen or os.environ.get("IMS_LISTEN") or "127.0.0.1:8080",
        secret_file=Path(secret_file) if secret_file else None,
        token_ttl_seconds=int(
            args.token_ttl_seconds
            or os.environ.get("IMS_TOKEN_TTL_SECONDS")
            or auth.DEFAULT_TTL_SECONDS
        ),
        nearest_radius_m=float(
            args.nearest_radius_m or os.environ.get("IMS_NEAREST_RADIUS_M") or DEFAULT_RADIUS_M
        ),
        cors_origin=args.cors_origin or os.environ.get("IMS_CORS_ORIGIN") or None,
    )
    host, port = _split_listen(config.listen)
    service = Service.open(config)

    # uvicorn re-raises the stopping signal once its loop has drained; turn
    # that into a normal exit so the snapshot is written and the lock released
    def _stop(signum, frame):
        raise SystemExit(0)

    previous = {s: signal.signal(s, _stop) for s in (signal.SIGINT, signal.SIGTERM)}
    try:
        print(f"serving on http://{config.listen} (data dir {config.data_dir})")
        uvicorn.run(create_app(service), host=host, port=port, log_level="warning")
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)
        service.close()
    return 0


def cmd_user_add(args) -> int:
    store = FileStore(_data_dir(args))
    try:
        engine = Engine(store)
        if not engine.snapshot.catalog.users and args.role != "ADMIN":
            raise ImsError(
                "the first user must be an ADMIN so later users can be managed",
                code="BOOTSTRAP_REQUIRES_ADMIN",
            )
        password = args.password if args.password is not None else getpass.getpass("password: ")
        user = User(
            id=new_entity_id(),
            username=args.username,
            display_name=args.display_name or args.username,
            role=args.role,
            password_hash=auth.derive_password(password),
        )
        result = engine.submit(
            OpRequest(
                op_id=str(uuid.uuid4()), actor=SYSTEM_ACTOR, kind="USER_CREATED", body=user.to_json()
            )
        )
        if result.status == "REJECTED":
            details = result.violation.details
            code = next(iter(details), result.violation.code)
            raise ImsError(", ".join(details) or code, code=code)
        engine.write_snapshot()
        print(f"created {args.role} user {args.username} ({user.id})")
        return 0
    finally:
        store.close()


def cmd_seed(args) -> int:
    store = FileStore(_data_dir(args))
    try:
        engine = Engine(store)
        counts = seed_fixture(engine, size=args.size)
        engine.write_snapshot()
        print(
            "seeded {size}: warehouses={warehouses} categories={categories} items={items} "
            "movements={movements} (applied={applied}, duplicate={duplicate})".format(**counts)
        )
        return 0
    finally:
        store.close()


def seed_fixture(engine: Engine, size: str = "demo") -> dict:
    """Load the fixed-seed fixture; safe to run twice thanks to fixed opIds."""
    rng = random.Random(42)

    def fixed_uuid() -> str:
        return str(uuid.UUID(int=rng.getrandbits(128), version=4))

    if size == "small":
        warehouse_specs = [("Depot", 52.2297, 21.0122, "Dock 1")]
        category_names: list[str] = []
        item_count, ean_count, max_receives = 5, 0, 1
    else:
        warehouse_specs = [
            ("North Dock", 52.2297, 21.0122, "Składowa 3, Warsaw"),
            ("West Dock", 52.4064, 16.9252, "Magazynowa 8, Poznan"),
            ("South Dock", 50.0647, 19.9450, "Portowa 12, Krakow"),
        ]
        category_names = ["Electronics", "Packaging", "Tools", "Safety", "Consumables"]
        item_count, ean_count, max_receives = 50, 10, 3

    counts = {"size": size, "warehouses": 0, "categories": 0, "items": 0, "movements": 0,
              "applied": 0, "duplicate": 0}

    def submit(kind: str, body: dict) -> None:
        result = engine.submit(
            OpRequest(op_id=fixed_uuid(), actor=SYSTEM_ACTOR, kind=kind, body=body)
        )
        if result.status == "REJECTED":
            raise ImsError(
                f"seed op {kind} rejected: {result.violation.code}", code=result.violation.code
            )
        counts["applied" if result.status == "APPLIED" else "duplicate"] += 1

    warehouse_ids = []
    for name, lat, lon, address in warehouse_specs:
        w = Warehouse(id=fixed_uuid(), name=name, location=GeoPoint(lat, lon), address=address)
        submit("WAREHOUSE_CREATED", w.to_json())
        warehouse_ids.append(w.id)
        counts["warehouses"] += 1

    category_ids = []
    for name in category_names:
        c = Category(id=fixed_uuid(), name=name)
        submit("CATEGORY_CREATED", c.to_json())
        category_ids.append(c.id)
        counts["categories"] += 1

    item_ids = []
    for index in range(item_count):
        if index == 0 and ean_count > 0:
            ean: str | None = "4006381333931"
        elif index < ean_count:
            prefix = "".join(str(rng.randrange(10)) for _ in range(12))
            ean = prefix + str(ean13_check_digit(prefix))
        else:
            ean = None
        item = Item(
            id=fixed_uuid(),
            name=f"Demo Item {index + 1:02d}",
            sku=f"SKU-{index + 1:04d}",
            ean13=ean,
            category_id=rng.choice(category_ids) if category_ids else None,
        )
        submit("ITEM_CREATED", item.to_json())
        item_ids.append(item.id)
        counts["items"] += 1

    for item_id in item_ids:
        for _ in range(rng.randint(1, max_receives)):
            body = {
                "warehouseId": rng.choice(warehouse_ids),
                "itemId": item_id,
                "quantity": rng.randint(1, 100),
            }
            submit("RECEIVE", body)
            counts["movements"] += 1
    return counts


def cmd_label(args) -> int:
    store = FileStore(_data_dir(args))
    try:
        engine = Engine(store)
        catalog = engine.snapshot.catalog
        if args.item_id is not None:
            item = catalog.items.get(args.item_id)
        else:
            live = [i for i in catalog.items.values() if i.sku == args.sku and not i.deleted]
            item = live[0] if live else None
        if item is None or item.deleted:
            raise ImsError("no such item", code="UNKNOWN_REFERENCE")
        if args.op is None:
            print(encode_payload(ItemLabel(item.id)))
            return 0
        if args.warehouse is None:
            raise ImsError("--op labels need --warehouse", code="VALIDATION_FAILED")
        warehouse = catalog.warehouses.get(args.warehouse)
        if warehouse is None or warehouse.deleted:
            raise ImsError("no such warehouse", code="UNKNOWN_REFERENCE")
        print(encode_payload(StockOpLabel(args.op, warehouse.id, item.id, args.qty)))
        return 0
    finally:
        store.close()


def cmd_verify_log(args) -> int:
    store = FileStore(_data_dir(args))
    try:
        events = list(store.iterate_events())
        doc = store.read_snapshot()
        if doc is None:
            replay(events)  # raises CORRUPT_LOG if the log does not re-apply
            print(f"OK: {len(events)} events, no snapshot")
            return 0
        snapshot_seq = doc.get("seq")
        state = replay(e for e in events if isinstance(snapshot_seq, int) and e.seq <= snapshot_seq)
        expected = canonical_json(snapshot_to_json(state))
        actual = canonical_json(doc)
        if expected != actual:
            print(
                f"MISMATCH: snapshot at seq {snapshot_seq} differs from replay of the log"
            )
            return 1
        replay((e for e in events if e.seq > state.seq), base=state)
        print(f"OK: {len(events)} events, snapshot at seq {snapshot_seq} matches replay")
        return 0
    finally:
        store.close()
