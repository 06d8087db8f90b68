"""Catalog entities (warehouses, items, categories, users) and their validation.

Entities are immutable records; every edit produces a new value with a bumped
version. Deletion is a soft flag so past stock movements stay replayable.
Validators return a list of violation codes; an empty list means the candidate
is acceptable against the given catalog state.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field, replace

from .auth import PasswordRecord
from .codec import UUID_RE, ean13_validate
from .errors import ImsError
from .geo import GeoPoint, check_point

ROLE_ADMIN = "ADMIN"
ROLE_EMPLOYEE = "EMPLOYEE"
ROLES = (ROLE_ADMIN, ROLE_EMPLOYEE)

MAX_NAME_LEN = 200
MAX_SKU_LEN = 64
MAX_ADDRESS_LEN = 500

USERNAME_RE = re.compile(r"[a-z0-9_.-]{3,40}\Z")


def new_entity_id() -> str:
    return str(uuid.uuid4())


def is_entity_id(value: object) -> bool:
    return isinstance(value, str) and UUID_RE.match(value) is not None


@dataclass(frozen=True)
class Warehouse:
    id: str
    name: str
    location: GeoPoint
    address: str = ""
    version: int = 1
    deleted: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "location": self.location.to_json(),
            "address": self.address,
            "version": self.version,
            "deleted": self.deleted,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Warehouse":
        return cls(
            id=obj["id"],
            name=obj["name"],
            location=GeoPoint.from_json(obj["location"]),
            address=obj.get("address", ""),
            version=int(obj.get("version", 1)),
            deleted=bool(obj.get("deleted", False)),
        )


@dataclass(frozen=True)
class Item:
    id: str
    name: str
    sku: str
    ean13: str | None = None
    category_id: str | None = None
    version: int = 1
    deleted: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "sku": self.sku,
            "ean13": self.ean13,
            "categoryId": self.category_id,
            "version": self.version,
            "deleted": self.deleted,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Item":
        return cls(
            id=obj["id"],
            name=obj["name"],
            sku=obj["sku"],
            ean13=obj.get("ean13"),
            category_id=obj.get("categoryId"),
            version=int(obj.get("version", 1)),
            deleted=bool(obj.get("deleted", False)),
        )


@dataclass(frozen=True)
class Category:
    id: str
    name: str
    version: int = 1
    deleted: bool = False

    def to_json(self) -> dict:
        return {"id": self.id, "name": self.name, "version": self.version, "deleted": self.deleted}

    @classmethod
    def from_json(cls, obj: dict) -> "Category":
        return cls(
            id=obj["id"],
            name=obj["name"],
            version=int(obj.get("version", 1)),
            deleted=bool(obj.get("deleted", False)),
        )


@dataclass(frozen=True)
class User:
    """Account provisioned by an admin; there is no self-registration."""

    id: str
    username: str
    display_name: str
    role: str
    password_hash: PasswordRecord
    active: bool = True
    version: int = 1

    def to_json(self, include_secret: bool = True) -> dict:
        out = {
            "id": self.id,
            "username": self.username,
            "displayName": self.display_name,
            "role": self.role,
            "active": self.active,
            "version": self.version,
        }
        if include_secret:
            out["passwordHash"] = self.password_hash.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "User":
        return cls(
            id=obj["id"],
            username=obj["username"],
            display_name=obj["displayName"],
            role=obj["role"],
            password_hash=PasswordRecord.from_json(obj["passwordHash"]),
            active=bool(obj.get("active", True)),
            version=int(obj.get("version", 1)),
        )


@dataclass(frozen=True)
class Catalog:
    """All entity tables keyed by id."""

    warehouses: dict[str, Warehouse] = field(default_factory=dict)
    items: dict[str, Item] = field(default_factory=dict)
    categories: dict[str, Category] = field(default_factory=dict)
    users: dict[str, User] = field(default_factory=dict)

    def with_warehouse(self, w: Warehouse) -> "Catalog":
        return replace(self, warehouses={**self.warehouses, w.id: w})

    def with_item(self, i: Item) -> "Catalog":
        return replace(self, items={**self.items, i.id: i})

    def with_category(self, c: Category) -> "Catalog":
        return replace(self, categories={**self.categories, c.id: c})

    def with_user(self, u: User) -> "Catalog":
        return replace(self, users={**self.users, u.id: u})


@dataclass(frozen=True)
class StockLevel:
    warehouse_id: str
    item_id: str
    quantity: int

    def to_json(self) -> dict:
        return {"warehouseId": self.warehouse_id, "itemId": self.item_id, "quantity": self.quantity}


def _name_taken(name: str, others) -> bool:
    folded = name.casefold()
    return any(o.name.casefold() == folded for o in others)


def validate_warehouse(catalog: Catalog, candidate: Warehouse) -> list[str]:
    """Violation codes for creating or updating a warehouse."""
    codes: list[str] = []
    if not candidate.name.strip():
        codes.append("EMPTY_NAME")
    elif len(candidate.name) > MAX_NAME_LEN:
        codes.append("NAME_TOO_LONG")
    if len(candidate.address) > MAX_ADDRESS_LEN:
        codes.append("ADDRESS_TOO_LONG")
    others = (w for w in catalog.warehouses.values() if w.id != candidate.id and not w.deleted)
    if not candidate.deleted and candidate.name.strip() and _name_taken(candidate.name, others):
        codes.append("NAME_TAKEN")
    try:
        check_point(candidate.location)
    except ImsError:
        codes.append("BAD_COORDINATES")
    return codes


def validate_item(catalog: Catalog, candidate: Item) -> list[str]:
    codes: list[str] = []
    if not candidate.name.strip():
        codes.append("EMPTY_NAME")
    elif len(candidate.name) > MAX_NAME_LEN:
        codes.append("NAME_TOO_LONG")
    if not candidate.sku:
        codes.append("EMPTY_SKU")
    elif len(candidate.sku) > MAX_SKU_LEN:
        codes.append("SKU_TOO_LONG")
    others = (i for i in catalog.items.values() if i.id != candidate.id and not i.deleted)
    if not candidate.deleted and candidate.sku and any(o.sku == candidate.sku for o in others):
        codes.append("SKU_TAKEN")
    if candidate.ean13 is not None and ean13_validate(candidate.ean13) is not None:
        codes.append("BAD_EAN13")
    if candidate.category_id is not None:
        cat = catalog.categories.get(candidate.category_id)
        if cat is None or cat.deleted:
            codes.append("UNKNOWN_CATEGORY")
    return codes


def validate_category(catalog: Catalog, candidate: Category) -> list[str]:
    codes: list[str] = []
    if not candidate.name.strip():
        codes.append("EMPTY_NAME")
    elif len(candidate.name) > MAX_NAME_LEN:
        codes.append("NAME_TOO_LONG")
    others = (c for c in catalog.categories.values() if c.id != candidate.id and not c.deleted)
    if not candidate.deleted and candidate.name.strip() and _name_taken(candidate.name, others):
        codes.append("NAME_TAKEN")
    return codes


def validate_user(catalog: Catalog, candidate: User) -> list[str]:
    codes: list[str] = []
    if not USERNAME_RE.match(candidate.username or ""):
        codes.append("BAD_USERNAME")
    if len(candidate.display_name) > MAX_NAME_LEN:
        codes.append("NAME_TOO_LONG")
    if candidate.role not in ROLES:
        codes.append("BAD_ROLE")
    # usernames stay unique across active and deactivated accounts
    others = (u for u in catalog.users.values() if u.id != candidate.id)
    if any(o.username == candidate.username for o in others):
        codes.append("USERNAME_TAKEN")
    if _demotes_last_admin(catalog, candidate):
        codes.append("LAST_ADMIN")
    return codes


def _demotes_last_admin(catalog: Catalog, candidate: User) -> bool:
    current = catalog.users.get(candidate.id)
    if current is None:
        return False
    was_admin = current.role == ROLE_ADMIN and current.active
    still_admin = candidate.role == ROLE_ADMIN and candidate.active
    if not was_admin or still_admin:
        return False
    return not any(
        u.role == ROLE_ADMIN and u.active for u in catalog.users.values() if u.id != candidate.id
    )
