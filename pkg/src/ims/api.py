"""HTTP/JSON surface under /api/v1: auth, catalog CRUD, stock, scan, sync.

Handlers parse request bodies by hand instead of through response models so
every failure surfaces as the one error shape {"code", "message", "details"}
with the violation codes produced by the inner modules, mapped onto HTTP
status by a single table.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import auth, codec, sync
from .engine import (
    MOVEMENT_KINDS,
    UNIQUENESS_CODES,
    OpRequest,
    OpResult,
    Snapshot,
    event_to_json,
    stock_levels,
)
from .errors import ImsError, PayloadError, TokenError
from .geo import GeoPoint, check_point, nearest_warehouse
from .model import Category, Item, User, Warehouse, new_entity_id
from .service import Service

STATUS_BY_CODE = {
    "MALFORMED": 401,
    "INVALID_SIGNATURE": 401,
    "EXPIRED": 401,
    "BAD_CREDENTIALS": 401,
    "UNAUTHENTICATED": 401,
    "FORBIDDEN": 403,
    "UNKNOWN_REFERENCE": 404,
    "UNKNOWN_ITEM": 404,
    "VERSION_CONFLICT": 409,
    "REJECTED_NEGATIVE": 409,
    "SKU_TAKEN": 409,
    "NAME_TAKEN": 409,
    "USERNAME_TAKEN": 409,
    "CURSOR_AHEAD": 409,
    "VALIDATION_FAILED": 422,
    "BAD_COORDINATES": 422,
    "UNRECOGNIZED_PAYLOAD": 422,
    "INVALID_PAYLOAD": 422,
    "BATCH_TOO_LARGE": 422,
    "WEAK_PASSWORD": 422,
    "PASSWORD_TOO_LONG": 422,
}


def _require(request: Request, service: Service, action: str | None = None) -> auth.TokenClaims:
    """Authenticate the bearer token, then check the permission matrix."""
    header = request.headers.get("authorization", "")
    if not header.startswith("Bearer "):
        raise TokenError("missing bearer token", code="MALFORMED")
    claims = auth.verify_token(header[len("Bearer "):], service.secret, now=service.engine.now())
    if action is not None and not auth.authorize(claims.role, action):
        raise ImsError(f"role {claims.role} may not {action}", code="FORBIDDEN")
    return claims


async def _json_body(request: Request) -> dict:
    try:
        doc = await request.json()
    except ValueError:
        raise ImsError("request body must be JSON", code="VALIDATION_FAILED") from None
    if not isinstance(doc, dict):
        raise ImsError("request body must be a JSON object", code="VALIDATION_FAILED")
    return doc


def _expect_int(body: dict, name: str) -> int:
    value = body.get(name)
    if type(value) is not int:
        raise ImsError(f"{name} must be an integer", code="VALIDATION_FAILED")
    return value


def _parse_float(value: str | None, name: str) -> float:
    if value is None:
        raise ImsError(f"{name} is required", code="VALIDATION_FAILED")
    try:
        return float(value)
    except ValueError:
        raise ImsError(f"{name} must be a number", code="VALIDATION_FAILED") from None


def _parse_nonneg_int(value: str, name: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise ImsError(f"{name} must be an integer", code="VALIDATION_FAILED") from None
    if parsed < 0:
        raise ImsError(f"{name} must be >= 0", code="VALIDATION_FAILED")
    return parsed


def _raise_for_result(result: OpResult) -> OpResult:
    """Turn a REJECTED OpResult into the matching HTTP error."""
    if result.status != "REJECTED":
        return result
    violation = result.violation
    code = violation.code
    details = list(violation.details)
    if code == "VALIDATION_FAILED":
        for d in details:
            if d in UNIQUENESS_CODES:
                code = d  # uniqueness conflicts answer 409, not 422
                break
    message = ", ".join(details) if details else code
    raise ImsError(message, code=code, details=details)


def _build(fn: Callable[[], dict]) -> dict:
    try:
        return fn()
    except ImsError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ImsError(f"body is missing or malformed: {exc}", code="VALIDATION_FAILED") from None


def _warehouse_body(snapshot: Snapshot, body: dict, entity_id: str, version: int) -> dict:
    return Warehouse(
        id=entity_id,
        name=body["name"],
        location=GeoPoint.from_json(body["location"]),
        address=body.get("address", ""),
        version=version,
    ).to_json()


def _item_body(snapshot: Snapshot, body: dict, entity_id: str, version: int) -> dict:
    return Item(
        id=entity_id,
        name=body["name"],
        sku=body["sku"],
        ean13=body.get("ean13"),
        category_id=body.get("categoryId"),
        version=version,
    ).to_json()


def _category_body(snapshot: Snapshot, body: dict, entity_id: str, version: int) -> dict:
    return Category(id=entity_id, name=body["name"], version=version).to_json()


def _user_body(snapshot: Snapshot, body: dict, entity_id: str, version: int) -> dict:
    if version == 1:
        password = body.get("password")
        if not isinstance(password, str):
            raise ImsError("password is required", code="VALIDATION_FAILED")
        record = auth.derive_password(password)
        active = body.get("active", True)
    else:
        current = snapshot.catalog.users.get(entity_id)
        if current is None:
            raise ImsError("no such user", code="UNKNOWN_REFERENCE")
        if body.get("password") is not None:
            if not isinstance(body["password"], str):
                raise ImsError("password must be a string", code="VALIDATION_FAILED")
            record = auth.derive_password(body["password"])
        else:
            record = current.password_hash
        active = body["active"]
    if not isinstance(active, bool):
        raise ImsError("active must be a boolean", code="VALIDATION_FAILED")
    return User(
        id=entity_id,
        username=body["username"],
        display_name=body.get("displayName", ""),
        role=body["role"],
        password_hash=record,
        active=active,
        version=version,
    ).to_json()


@dataclass(frozen=True)
class _Resource:
    kind: str
    table: str
    singular: str
    read_action: str
    write_action: str
    build: Callable
    deletable: bool = True
    secret: bool = False

    def public(self, entity) -> dict:
        return entity.to_json(include_secret=False) if self.secret else entity.to_json()


RESOURCES = {
    "warehouses": _Resource(
        "WAREHOUSE", "warehouses", "warehouse", auth.READ_CATALOG, auth.WRITE_CATALOG, _warehouse_body
    ),
    "items": _Resource("ITEM", "items", "item", auth.READ_CATALOG, auth.WRITE_CATALOG, _item_body),
    "categories": _Resource(
        "CATEGORY", "categories", "category", auth.READ_CATALOG, auth.WRITE_CATALOG, _category_body
    ),
    "users": _Resource(
        "USER", "users", "user", auth.MANAGE_USERS, auth.MANAGE_USERS, _user_body,
        deletable=False, secret=True,
    ),
}


def create_app(service: Service) -> FastAPI:
    engine = service.engine
    app = FastAPI(title="inventory service", docs_url=None, redoc_url=None, openapi_url=None)

    if service.config.cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[service.config.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ImsError)
    async def on_ims_error(request: Request, exc: ImsError):
        status = STATUS_BY_CODE.get(exc.code, 500)
        details = exc.details if isinstance(exc.details, list) else []
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "details": details},
        )

    @app.exception_handler(RequestValidationError)
    async def on_request_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "VALIDATION_FAILED", "message": "request does not parse", "details": []},
        )

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "seq": engine.snapshot.seq}

    @app.post("/api/v1/auth/login")
    async def login(request: Request):
        doc = await _json_body(request)
        username, password = doc.get("username"), doc.get("password")
        if not isinstance(username, str) or not isinstance(password, str):
            raise ImsError("username and password are required", code="VALIDATION_FAILED")
        users = list(engine.snapshot.catalog.users.values())
        token = auth.login(
            users,
            username,
            password,
            secret=service.secret,
            now=engine.now(),
            ttl_seconds=service.config.token_ttl_seconds,
        )
        user = next(u for u in users if u.username == username)
        return {"token": token, "user": user.to_json(include_secret=False)}

    # registered before the warehouses/{id} routes so "nearest" is not read as an id
    @app.get("/api/v1/warehouses/nearest")
    async def warehouses_nearest(
        request: Request,
        lat: str | None = None,
        lon: str | None = None,
        radiusM: str | None = None,
    ):
        _require(request, service, auth.READ_CATALOG)
        point = GeoPoint(_parse_float(lat, "lat"), _parse_float(lon, "lon"))
        check_point(point)
        radius = (
            service.config.nearest_radius_m if radiusM is None else _parse_float(radiusM, "radiusM")
        )
        live = [w for w in engine.snapshot.catalog.warehouses.values() if not w.deleted]
        match = nearest_warehouse(point, live, max_radius_m=radius)
        if match is None:
            return {"warehouse": None}
        return {"warehouse": match.warehouse.to_json(), "distanceM": match.distance_km * 1000.0}

    @app.get("/api/v1/stock")
    async def get_stock(request: Request, warehouseId: str | None = None, itemId: str | None = None):
        _require(request, service, auth.READ_STOCK)
        levels = stock_levels(engine.snapshot, warehouse_id=warehouseId, item_id=itemId)
        return [level.to_json() for level in levels]

    @app.post("/api/v1/stock/movements")
    async def post_movement(request: Request):
        claims = _require(request, service)  # per-kind authorization happens in the engine
        doc = await _json_body(request)
        kind = doc.get("kind")
        if kind not in MOVEMENT_KINDS:
            raise ImsError("kind must be RECEIVE, ISSUE, TRANSFER or ADJUST", code="VALIDATION_FAILED")
        op_id = doc.get("opId")
        if op_id is None:
            op_id = str(uuid.uuid4())
        body = {k: v for k, v in doc.items() if k not in ("kind", "opId")}
        result = engine.submit(OpRequest(op_id=op_id, actor=claims.sub, kind=kind, body=body))
        return _raise_for_result(result).to_json()

    @app.post("/api/v1/scan")
    async def post_scan(request: Request):
        _require(request, service, auth.READ_STOCK)
        doc = await _json_body(request)
        payload = doc.get("payload")
        if not isinstance(payload, str):
            raise ImsError("payload must be a string", code="VALIDATION_FAILED")
        snapshot = engine.snapshot
        label = None
        try:
            label = codec.decode_payload(payload)
        except PayloadError:
            label = None
        if isinstance(label, codec.ItemLabel):
            return _item_resolution(snapshot, snapshot.catalog.items.get(label.item_id))
        if isinstance(label, codec.StockOpLabel):
            warehouse = snapshot.catalog.warehouses.get(label.warehouse_id)
            if warehouse is None or warehouse.deleted:
                raise ImsError("unknown warehouse in payload", code="UNKNOWN_REFERENCE")
            item = snapshot.catalog.items.get(label.item_id)
            if item is None or item.deleted:
                raise ImsError("unknown item in payload", code="UNKNOWN_REFERENCE")
            proposal = {
                "kind": label.kind,
                "warehouseId": label.warehouse_id,
                "itemId": label.item_id,
                "quantity": label.quantity,
            }
            return {"type": "PREFILLED_OP", "proposal": proposal}
        if codec.ean13_validate(payload) is None:
            matches = sorted(
                i.id for i in snapshot.catalog.items.values() if i.ean13 == payload and not i.deleted
            )
            if not matches:
                raise ImsError("no item carries this barcode", code="UNKNOWN_ITEM")
            return _item_resolution(snapshot, snapshot.catalog.items[matches[0]])
        raise ImsError(
            "payload is neither a known label grammar nor a valid EAN-13",
            code="UNRECOGNIZED_PAYLOAD",
        )

    @app.get("/api/v1/items/{item_id}/label")
    async def get_label(
        item_id: str,
        request: Request,
        kind: str = "ITEM",
        opKind: str | None = None,
        warehouseId: str | None = None,
        quantity: str | None = None,
    ):
        _require(request, service, auth.READ_CATALOG)
        snapshot = engine.snapshot
        item = snapshot.catalog.items.get(item_id)
        if item is None or item.deleted:
            raise ImsError("no such item", code="UNKNOWN_REFERENCE")
        if kind == "ITEM":
            return {"payload": codec.encode_payload(codec.ItemLabel(item_id))}
        if kind != "OP":
            raise ImsError("kind must be ITEM or OP", code="INVALID_PAYLOAD")
        warehouse = snapshot.catalog.warehouses.get(warehouseId or "")
        if warehouse is None or warehouse.deleted:
            raise ImsError("no such warehouse", code="UNKNOWN_REFERENCE")
        try:
            qty = int(quantity)
        except (TypeError, ValueError):
            raise ImsError("quantity must be an integer >= 1", code="INVALID_PAYLOAD") from None
        label = codec.StockOpLabel(opKind or "", warehouseId, item_id, qty)
        return {"payload": codec.encode_payload(label)}

    @app.post("/api/v1/sync/push")
    async def sync_push(request: Request):
        claims = _require(request, service)  # per-op authorization happens in the engine
        doc = await _json_body(request)
        ops_raw = doc.get("ops")
        if not isinstance(ops_raw, list):
            raise ImsError("ops must be a list", code="VALIDATION_FAILED")
        ops = tuple(
            OpRequest(
                op_id=op.get("opId"), actor=claims.sub, kind=op.get("kind"), body=op.get("body")
            )
            if isinstance(op, dict)
            else OpRequest(op_id=None, actor=claims.sub, kind=None, body=None)
            for op in ops_raw
        )
        outcome = sync.push(engine, sync.PushBatch(client_id=doc.get("clientId"), ops=ops))
        return {"results": [r.to_json() for r in outcome.results], "cursor": outcome.cursor}

    @app.get("/api/v1/sync/pull")
    async def sync_pull(request: Request, cursor: str | None = None, limit: str | None = None):
        _require(request, service, auth.READ_EVENTS)
        parsed_cursor = 0 if cursor is None else _parse_nonneg_int(cursor, "cursor")
        parsed_limit = (
            sync.DEFAULT_PULL_LIMIT if limit is None else _parse_nonneg_int(limit, "limit")
        )
        page = sync.pull(engine, parsed_cursor, parsed_limit)
        return {
            "events": [event_to_json(e) for e in page.events],
            "nextCursor": page.next_cursor,
            "hasMore": page.has_more,
        }

    for path, resource in RESOURCES.items():
        _register_crud(app, service, path, resource)

    return app


def _item_resolution(snapshot: Snapshot, item: Item | None) -> dict:
    if item is None or item.deleted:
        raise ImsError("unknown item", code="UNKNOWN_ITEM")
    levels = [level.to_json() for level in stock_levels(snapshot, item_id=item.id)]
    return {"type": "ITEM", "item": item.to_json(), "stockLevels": levels}


def _register_crud(app: FastAPI, service: Service, path: str, res: _Resource) -> None:
    engine = service.engine

    def table():
        return getattr(engine.snapshot.catalog, res.table)

    @app.get(f"/api/v1/{path}")
    async def list_entities(request: Request):
        _require(request, service, res.read_action)
        return [
            res.public(entity)
            for _, entity in sorted(table().items())
            if not getattr(entity, "deleted", False)
        ]

    @app.get(f"/api/v1/{path}/{{entity_id}}")
    async def get_entity(entity_id: str, request: Request):
        _require(request, service, res.read_action)
        entity = table().get(entity_id)
        if entity is None or getattr(entity, "deleted", False):
            raise ImsError(f"no such {res.singular}", code="UNKNOWN_REFERENCE")
        return res.public(entity)

    @app.post(f"/api/v1/{path}", status_code=201)
    async def create_entity(request: Request):
        claims = _require(request, service, res.write_action)
        body = await _json_body(request)
        entity_id = new_entity_id()
        event_body = _build(lambda: res.build(engine.snapshot, body, entity_id, 1))
        result = engine.submit(
            OpRequest(
                op_id=str(uuid.uuid4()), actor=claims.sub, kind=f"{res.kind}_CREATED", body=event_body
            )
        )
        _raise_for_result(result)
        return res.public(table()[entity_id])

    @app.put(f"/api/v1/{path}/{{entity_id}}")
    async def update_entity(entity_id: str, request: Request):
        claims = _require(request, service, res.write_action)
        body = await _json_body(request)
        expected = _expect_int(body, "expectedVersion")
        event_body = _build(lambda: res.build(engine.snapshot, body, entity_id, expected + 1))
        event_body["expectedVersion"] = expected
        result = engine.submit(
            OpRequest(
                op_id=str(uuid.uuid4()), actor=claims.sub, kind=f"{res.kind}_UPDATED", body=event_body
            )
        )
        _raise_for_result(result)
        return res.public(table()[entity_id])

    if not res.deletable:
        return

    @app.delete(f"/api/v1/{path}/{{entity_id}}")
    async def delete_entity(entity_id: str, request: Request):
        claims = _require(request, service, res.write_action)
        body = await _json_body(request)
        expected = _expect_int(body, "expectedVersion")
        result = engine.submit(
            OpRequest(
                op_id=str(uuid.uuid4()),
                actor=claims.sub,
                kind=f"{res.kind}_DELETED",
                body={"id": entity_id, "expectedVersion": expected},
            )
        )
        _raise_for_result(result)
        return res.public(table()[entity_id])
