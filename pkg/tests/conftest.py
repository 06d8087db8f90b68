from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]),
)
settings.register_profile(
    "fast",
    settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.too_slow]),
)
settings.load_profile("fast" if os.environ.get("IMS_COVERAGE") else "default")


@pytest.fixture
def announce(capsys):
    """Print one uncaptured pass/fail line per acceptance test."""

    def _announce(name: str, ok: bool, detail: str) -> None:
        status = "PASS" if ok else "FAIL"
        with capsys.disabled():
            print(f"\n[ACCEPTANCE] {name}: {status} ({detail})")

    return _announce
