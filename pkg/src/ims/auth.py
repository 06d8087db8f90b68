"""Credential hashing, HMAC-signed bearer tokens, and the role permission matrix.

Tokens are local and provider-agnostic: `base64url(claims-json) "." base64url(
HMAC-SHA256(secret, claims-json))`. A hosted identity provider could be slotted
in behind `login`/`verify_token` later without touching callers.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
import os
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .errors import ImsError, TokenError

if TYPE_CHECKING:
    from .model import User

DEFAULT_ITERATIONS = 100_000
DEFAULT_TTL_SECONDS = 8 * 3600  # one warehouse shift

READ_CATALOG = "READ_CATALOG"
READ_STOCK = "READ_STOCK"
MOVE_STOCK = "MOVE_STOCK"
ADJUST_STOCK = "ADJUST_STOCK"
WRITE_CATALOG = "WRITE_CATALOG"
MANAGE_USERS = "MANAGE_USERS"
READ_EVENTS = "READ_EVENTS"

ACTIONS = (
    READ_CATALOG,
    READ_STOCK,
    MOVE_STOCK,
    ADJUST_STOCK,
    WRITE_CATALOG,
    MANAGE_USERS,
    READ_EVENTS,
)

# role -> allowed actions; anything absent is denied
PERMISSIONS: dict[str, frozenset[str]] = {
    "ADMIN": frozenset(ACTIONS),
    "EMPLOYEE": frozenset({READ_CATALOG, READ_STOCK, MOVE_STOCK, READ_EVENTS}),
}


def authorize(role: str, action: str) -> bool:
    """Pure lookup in the permission matrix."""
    return action in PERMISSIONS.get(role, frozenset())


@dataclass(frozen=True)
class PasswordRecord:
    """Salted, iterated HMAC-SHA256 credential hash (PBKDF2)."""

    salt: bytes
    iterations: int
    hash: bytes

    def to_json(self) -> dict:
        return {"salt": self.salt.hex(), "iterations": self.iterations, "hash": self.hash.hex()}

    @classmethod
    def from_json(cls, obj: dict) -> "PasswordRecord":
        return cls(bytes.fromhex(obj["salt"]), int(obj["iterations"]), bytes.fromhex(obj["hash"]))


def derive_password(plain: str, salt: bytes | None = None, iterations: int = DEFAULT_ITERATIONS) -> PasswordRecord:
    """Derive a PasswordRecord; deterministic for fixed (plain, salt, iterations)."""
    if len(plain) < 8:
        raise ImsError("password must be at least 8 characters", code="WEAK_PASSWORD")
    if len(plain) > 128:
        raise ImsError("password must be at most 128 characters", code="PASSWORD_TOO_LONG")
    if iterations < 100_000:
        raise ImsError("iteration count too low", code="WEAK_PASSWORD")
    if salt is None:
        salt = os.urandom(16)
    digest = hashlib.pbkdf2_hmac("sha256", plain.encode("utf-8"), salt, iterations, dklen=32)
    return PasswordRecord(salt=salt, iterations=iterations, hash=digest)


def verify_password(record: PasswordRecord, plain: str) -> bool:
    derived = hashlib.pbkdf2_hmac("sha256", plain.encode("utf-8"), record.salt, record.iterations, dklen=32)
    return hmac.compare_digest(derived, record.hash)


@dataclass(frozen=True)
class TokenClaims:
    sub: str  # user id
    role: str
    iat: int  # unix seconds
    exp: int


def sign_token(claims: TokenClaims, secret: bytes) -> str:
    body = json.dumps(
        {"sub": claims.sub, "role": claims.role, "iat": claims.iat, "exp": claims.exp},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("ascii")
    sig = hmac.new(secret, body, hashlib.sha256).digest()
    return f"{_b64url(body)}.{_b64url(sig)}"


def verify_token(token: str, secret: bytes, now: float) -> TokenClaims:
    """Return the claims iff the signature is valid and the token not expired.

    Expiry is inclusive: now >= exp means EXPIRED.
    """
    parts = token.split(".") if isinstance(token, str) else []
    if len(parts) != 2:
        raise TokenError("token must be <claims>.<signature>", code="MALFORMED")
    body = _b64url_decode(parts[0])
    sig = _b64url_decode(parts[1])
    expected = hmac.new(secret, body, hashlib.sha256).digest()
    if not hmac.compare_digest(sig, expected):
        raise TokenError("signature mismatch", code="INVALID_SIGNATURE")
    try:
        obj = json.loads(body.decode("utf-8"))
        claims = TokenClaims(sub=obj["sub"], role=obj["role"], iat=obj["iat"], exp=obj["exp"])
    except (ValueError, KeyError, TypeError):
        raise TokenError("claims are not valid JSON", code="MALFORMED") from None
    if not (isinstance(claims.sub, str) and isinstance(claims.role, str)):
        raise TokenError("bad claim types", code="MALFORMED")
    if type(claims.iat) is not int or type(claims.exp) is not int or claims.exp <= claims.iat:
        raise TokenError("bad claim times", code="MALFORMED")
    if now >= claims.exp:
        raise TokenError("token expired", code="EXPIRED")
    return claims


def login(
    users: Iterable["User"],
    username: str,
    password: str,
    *,
    secret: bytes,
    now: float,
    ttl_seconds: int = DEFAULT_TTL_SECONDS,
) -> str:
    """Issue a signed token for an active user with matching credentials.

    Unknown user, wrong password and deactivated user are indistinguishable
    to the caller: all raise BAD_CREDENTIALS.
    """
    user = next((u for u in users if u.username == username), None)
    if user is None or not user.active or not verify_password(user.password_hash, password):
        raise ImsError("bad credentials", code="BAD_CREDENTIALS")
    claims = TokenClaims(sub=user.id, role=user.role, iat=int(now), exp=int(now) + ttl_seconds)
    return sign_token(claims, secret)


def _b64url(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def _b64url_decode(text: str) -> bytes:
    try:
        raw = base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    except (binascii.Error, ValueError):
        raise TokenError("bad base64url", code="MALFORMED") from None
    # reject non-canonical encodings so any one-byte token mutation fails
    if _b64url(raw) != text:
        raise TokenError("non-canonical base64url", code="MALFORMED")
    return raw
