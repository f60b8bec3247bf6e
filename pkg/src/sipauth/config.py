"""Flat ``key = value`` configuration.

Precedence, lowest first: built-in defaults, config file, ``SIPAUTH_<KEY>``
environment variables, command-line flags.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path


def parse_int(text: str) -> int:
    return int(text.strip(), 0)


def parse_kv_file(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        values[key.strip()] = value.strip()
    return values


@dataclass
class Config:
    curve_profile: str = "TOY-17"
    hash_name: str = "sha256"
    freshness_window_ms: int = 5000
    realm: str = "hospital.example"
    db_path: str = "sipauth-{scheme}.db"
    server_key_path: str = "sipauth-server.key"
    transcript_path: str = "sipauth-transcripts.log"
    bind_address: str = "127.0.0.1:5062"
    t_pm: float = 0.0171
    t_h: float = 0.00032

    def __post_init__(self) -> None:
        if self.freshness_window_ms <= 0:
            raise ValueError("freshness_window_ms must be positive")
        if self.t_pm <= 0 or self.t_h <= 0:
            raise ValueError("cost-model constants must be positive")

    def db_file(self, scheme: str) -> Path:
        return Path(self.db_path.format(scheme=scheme))

    def bind(self) -> tuple[str, int]:
        host, _, port = self.bind_address.rpartition(":")
        return host or "127.0.0.1", int(port)

    def updated(self, **overrides) -> "Config":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **overrides)


def _coerce(field_type, value: str):
    if field_type in (int, "int"):
        return parse_int(value)
    if field_type in (float, "float"):
        return float(value)
    return value


def load_config(path: str | Path | None = None, environ=None) -> Config:
    environ = os.environ if environ is None else environ
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(parse_kv_file(Path(path).read_text(encoding="utf-8")))
    known = {f.name: f.type for f in fields(Config)}
    for name in known:
        env_key = f"SIPAUTH_{name.upper()}"
        if env_key in environ:
            raw[name] = environ[env_key]
    unknown = set(raw) - set(known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return Config(**{k: _coerce(known[k], v) for k, v in raw.items()})
