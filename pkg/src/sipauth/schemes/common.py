"""Types shared by all three schemes: credentials, server keys, the user database."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar, Protocol

from ..ecc import CurveParams, Point, random_scalar, scalar_mult
from ..errors import DuplicateUser, ReplayDetected, UnknownUser
from ..prims import FRESHNESS_WINDOW_MS, encode_string

DEFAULT_REALM = b"hospital.example"


@dataclass(frozen=True)
class Credentials:
    id_u: bytes
    pw_u: bytes

    def __post_init__(self) -> None:
        object.__setattr__(self, "id_u", encode_string(self.id_u))
        object.__setattr__(self, "pw_u", encode_string(self.pw_u))
        if not self.id_u or not self.pw_u:
            raise ValueError("identity and password must be non-empty")
        # Zhang et al. recover the identity from a zero-padded XOR
        if self.id_u.endswith(b"\0"):
            raise ValueError("identity must not end with a NUL byte")

    def __repr__(self) -> str:
        return f"Credentials(id_u={self.id_u!r}, pw_u=<hidden>)"


@dataclass(frozen=True)
class ServerKeys:
    curve: CurveParams
    k_s: int
    q_s: Point

    @classmethod
    def from_secret(cls, curve: CurveParams, k_s: int) -> "ServerKeys":
        if not 1 <= k_s < curve.n:
            raise ValueError("master key must lie in [1, n-1]")
        return cls(curve, k_s, scalar_mult(k_s, curve.P, curve))

    @classmethod
    def generate(cls, curve: CurveParams, rng) -> "ServerKeys":
        return cls.from_secret(curve, random_scalar(rng, curve))

    def public(self, realm: bytes = DEFAULT_REALM) -> "PublicParams":
        return PublicParams(self.curve, self.q_s, realm)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(f"{self.curve.profile_name} {self.k_s:x}\n", encoding="ascii")

    @classmethod
    def load(cls, path: str | Path, curve: CurveParams) -> "ServerKeys":
        profile, k_hex = Path(path).read_text(encoding="ascii").split()
        if profile != curve.profile_name:
            raise ValueError(f"key file is for {profile}, not {curve.profile_name}")
        return cls.from_secret(curve, int(k_hex, 16))


@dataclass(frozen=True)
class PublicParams:
    """What the server publishes: the group, its public key, and the realm label."""

    curve: CurveParams
    q_s: Point
    realm: bytes = DEFAULT_REALM


class Record(Protocol):
    scheme_id: ClassVar[str]

    @property
    def key(self) -> bytes: ...

    def to_fields(self) -> list[bytes]: ...


class ReplayCache:
    """Remembers accepted ``(R_u, t_u)`` pairs for as long as they stay fresh."""

    def __init__(self, window_ms: int = FRESHNESS_WINDOW_MS) -> None:
        self.window_ms = window_ms
        self._seen: dict[bytes, int] = {}
        self._lock = threading.Lock()

    def check_and_add(self, key: bytes, t_sent: int, t_now: int) -> None:
        with self._lock:
            horizon = t_now - self.window_ms
            self._seen = {k: t for k, t in self._seen.items() if t >= horizon}
            if key in self._seen:
                raise ReplayDetected("login request already seen inside the window")
            self._seen[key] = t_sent

    def __len__(self) -> int:
        return len(self._seen)


class ServerDatabase:
    """Registration table keyed by each scheme's index, plus the replay cache.

    Mutations take an exclusive lock; lookups return immutable records.
    """

    def __init__(self, scheme_id: str, window_ms: int = FRESHNESS_WINDOW_MS) -> None:
        self.scheme_id = scheme_id
        self.replay = ReplayCache(window_ms)
        self._records: dict[bytes, Record] = {}
        self._lock = threading.Lock()

    def add(self, record: Record) -> None:
        with self._lock:
            if record.key in self._records:
                raise DuplicateUser("a record with this index already exists")
            self._records[record.key] = record

    def lookup(self, key: bytes) -> Record:
        try:
            return self._records[key]
        except KeyError:
            raise UnknownUser("no registration record for this index") from None

    def __contains__(self, key: bytes) -> bool:
        return key in self._records

    def __len__(self) -> int:
        return len(self._records)

    def records(self) -> list[Record]:
        return list(self._records.values())

    # One record per line, hex fields separated by spaces, index key first.
    def dumps(self) -> str:
        lines = [f"# scheme={self.scheme_id}"]
        for record in self._records.values():
            lines.append(" ".join(f.hex() for f in record.to_fields()))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        tmp = Path(f"{path}.tmp")
        tmp.write_text(self.dumps(), encoding="ascii")
        tmp.replace(path)

    @classmethod
    def loads(cls, text: str, record_type, window_ms: int = FRESHNESS_WINDOW_MS) -> "ServerDatabase":
        db = cls(record_type.scheme_id, window_ms)
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                tag, _, value = line[1:].strip().partition("=")
                if tag == "scheme" and value != record_type.scheme_id:
                    raise ValueError(f"database belongs to scheme {value!r}")
                continue
            db.add(record_type.from_fields([bytes.fromhex(f) for f in line.split()]))
        return db

    @classmethod
    def load(cls, path: str | Path, record_type, window_ms: int = FRESHNESS_WINDOW_MS) -> "ServerDatabase":
        return cls.loads(Path(path).read_text(encoding="ascii"), record_type, window_ms)
