"""EAN-13 check-digit math and the scan label payload grammar.

Label payloads are ASCII, semicolon separated and version tagged:

    IMS1;ITEM;<uuid>
    IMS1;OP;RECEIVE;<warehouse-uuid>;<item-uuid>;<qty>
    IMS1;OP;ISSUE;<warehouse-uuid>;<item-uuid>;<qty>

UUIDs are lowercase hyphenated, quantities are positive decimal integers
without leading zeros, so every payload has exactly one encoding and
encode/decode are mutual inverses. The QR symbology already carries error
correction, so payloads carry no checksum of their own. Pixel-level image
encoding/decoding is a client concern and does not live here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ImsError, PayloadError

PAYLOAD_VERSION = "IMS1"
RECEIVE = "RECEIVE"
ISSUE = "ISSUE"

UUID_RE = re.compile(r"[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}\Z")
_QTY_RE = re.compile(r"[1-9][0-9]*\Z")


def ean13_check_digit(prefix: str) -> int:
    """Mod-10 check digit for a 12-digit prefix.

    Positions are weighted 1, 3, 1, 3, ... from the left; the check digit
    brings the total weighted sum to a multiple of 10.
    """
    if not isinstance(prefix, str) or len(prefix) != 12 or not prefix.isascii() or not prefix.isdigit():
        raise ImsError(f"expected 12 decimal digits, got {prefix!r}", code="MALFORMED_INPUT")
    total = sum(int(d) * (1 if i % 2 == 0 else 3) for i, d in enumerate(prefix))
    return (10 - total % 10) % 10


def ean13_validate(code: str) -> str | None:
    """None when `code` is a well-formed EAN-13, else a violation code."""
    if not isinstance(code, str) or len(code) != 13:
        return "BAD_LENGTH"
    if not code.isascii() or not code.isdigit():
        return "NON_DIGIT"
    if int(code[12]) != ean13_check_digit(code[:12]):
        return "BAD_CHECK_DIGIT"
    return None


@dataclass(frozen=True)
class ItemLabel:
    """Label resolving to one catalog item."""

    item_id: str


@dataclass(frozen=True)
class StockOpLabel:
    """Prefilled stock movement awaiting employee confirmation."""

    kind: str  # RECEIVE or ISSUE
    warehouse_id: str
    item_id: str
    quantity: int


def encode_payload(payload: ItemLabel | StockOpLabel) -> str:
    """Canonical ASCII encoding of a label payload.

    Raises INVALID_PAYLOAD for anything that would not decode back to the
    same payload (bad uuid form, unknown kind, quantity < 1).
    """
    if isinstance(payload, ItemLabel):
        _require_uuid(payload.item_id)
        return f"{PAYLOAD_VERSION};ITEM;{payload.item_id}"
    if isinstance(payload, StockOpLabel):
        if payload.kind not in (RECEIVE, ISSUE):
            raise PayloadError(f"unknown op kind {payload.kind!r}", code="INVALID_PAYLOAD")
        _require_uuid(payload.warehouse_id)
        _require_uuid(payload.item_id)
        if type(payload.quantity) is not int or payload.quantity < 1:
            raise PayloadError(f"quantity must be >= 1, got {payload.quantity!r}", code="INVALID_PAYLOAD")
        return (
            f"{PAYLOAD_VERSION};OP;{payload.kind};"
            f"{payload.warehouse_id};{payload.item_id};{payload.quantity}"
        )
    raise PayloadError(f"unsupported payload type {type(payload).__name__}", code="INVALID_PAYLOAD")


def decode_payload(text: str) -> ItemLabel | StockOpLabel:
    """Parse canonical payload text; never mutates state.

    Raises PayloadError with one of UNSUPPORTED_VERSION, UNKNOWN_KIND,
    BAD_FIELD_COUNT, BAD_UUID or BAD_QUANTITY.
    """
    fields = text.split(";") if isinstance(text, str) else [""]
    if fields[0] != PAYLOAD_VERSION:
        raise PayloadError(f"unsupported payload version {fields[0]!r}", code="UNSUPPORTED_VERSION")
    kind = fields[1] if len(fields) > 1 else ""
    if kind == "ITEM":
        if len(fields) != 3:
            raise PayloadError("ITEM payload takes exactly one field", code="BAD_FIELD_COUNT")
        if not UUID_RE.match(fields[2]):
            raise PayloadError(f"bad uuid {fields[2]!r}", code="BAD_UUID")
        return ItemLabel(item_id=fields[2])
    if kind == "OP":
        if len(fields) != 6:
            raise PayloadError("OP payload takes exactly four fields", code="BAD_FIELD_COUNT")
        op_kind, warehouse_id, item_id, qty = fields[2], fields[3], fields[4], fields[5]
        if op_kind not in (RECEIVE, ISSUE):
            raise PayloadError(f"unknown op kind {op_kind!r}", code="UNKNOWN_KIND")
        for value in (warehouse_id, item_id):
            if not UUID_RE.match(value):
                raise PayloadError(f"bad uuid {value!r}", code="BAD_UUID")
        if not _QTY_RE.match(qty):
            raise PayloadError(f"bad quantity {qty!r}", code="BAD_QUANTITY")
        return StockOpLabel(kind=op_kind, warehouse_id=warehouse_id, item_id=item_id, quantity=int(qty))
    raise PayloadError(f"unknown payload kind {kind!r}", code="UNKNOWN_KIND")


def _require_uuid(value: str) -> None:
    if not isinstance(value, str) or not UUID_RE.match(value):
        raise PayloadError(f"bad uuid {value!r}", code="INVALID_PAYLOAD")
