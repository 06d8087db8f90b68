"""Shared exception types.

Every modeled failure carries a machine-readable `code` that is passed
through unchanged to API error bodies and CLI diagnostics.
"""

from __future__ import annotations


class ImsError(Exception):
    """Base class for modeled failures."""

    code = "INTERNAL"

    def __init__(self, message: str = "", *, code: str | None = None, details: list | None = None):
        super().__init__(message or code or self.code)
        if code is not None:
            self.code = code
        self.details = list(details) if details else []


class PayloadError(ImsError):
    """Label payload text that cannot be decoded or encoded canonically."""


class TokenError(ImsError):
    """Bearer token rejected: MALFORMED, INVALID_SIGNATURE or EXPIRED."""


class StoreError(ImsError):
    """Persistence failure: SEQUENCE_GAP, CORRUPT_LOG, IO_FAILURE, ..."""


class SyncError(ImsError):
    """Sync protocol failure: CURSOR_AHEAD, GAP_DETECTED, BATCH_TOO_LARGE, ..."""
