"""Service assembly: configuration, secret handling and engine lifecycle."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .auth import DEFAULT_TTL_SECONDS
from .engine import Engine
from .geo import DEFAULT_RADIUS_M
from .store import FileStore

SECRET_FILE = "secret.key"


@dataclass
class ServiceConfig:
    data_dir: Path
    listen: str = "127.0.0.1:8080"
    secret_file: Path | None = None  # default: <data_dir>/secret.key
    token_ttl_seconds: int = DEFAULT_TTL_SECONDS
    nearest_radius_m: float = DEFAULT_RADIUS_M
    cors_origin: str | None = None


@dataclass
class Service:
    """An open store plus the engine and signing secret built on top of it."""

    config: ServiceConfig
    store: FileStore
    engine: Engine
    secret: bytes = field(repr=False)

    @classmethod
    def open(cls, config: ServiceConfig) -> "Service":
        store = FileStore(config.data_dir)
        engine = Engine(store)
        secret_path = Path(config.secret_file) if config.secret_file else store.data_dir / SECRET_FILE
        secret = _load_or_create_secret(secret_path)
        return cls(config=config, store=store, engine=engine, secret=secret)

    def close(self) -> None:
        self.engine.write_snapshot()
        self.store.close()


def _load_or_create_secret(path: Path) -> bytes:
    if path.exists():
        return path.read_bytes()
    secret = os.urandom(32)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    with os.fdopen(fd, "wb") as fh:
        fh.write(secret)
    return secret
