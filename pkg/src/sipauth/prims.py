"""Hashing, XOR, fixed-width encodings, timestamps and a small message codec.

Every ``||`` in the protocol formulas becomes one call to :func:`hash_parts`
with one argument per concatenated item. Each item is length-prefixed before
hashing so that ``("ab", "c")`` and ``("a", "bc")`` never collide.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import time

from . import counting
from .ecc import INFINITY, CurveParams, Point
from .errors import InvalidPoint, MalformedMessage

DIGEST_SIZE = 32
FRESHNESS_WINDOW_MS = 5000
INDEX_SUFFIX = b"\x01"

POINT_TAG_INFINITY = 0x00
POINT_TAG_AFFINE = 0x04

_SUPPORTED_HASHES = ("sha256", "sha3_256", "blake2s")
_hash_name = "sha256"


def use_hash(name: str) -> None:
    """Select the project-wide 256-bit hash (``sha256`` by default)."""
    global _hash_name
    if name not in _SUPPORTED_HASHES:
        raise ValueError(f"hash must be one of {_SUPPORTED_HASHES}, got {name!r}")
    _hash_name = name


def hash_parts(*parts: bytes) -> bytes:
    h = hashlib.new(_hash_name)
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    counting.note_hash()
    return h.digest()


def xor(a: bytes, b: bytes) -> bytes:
    """Byte-wise XOR, right-padding the shorter operand with zeros."""
    width = max(len(a), len(b))
    a = a.ljust(width, b"\0")
    b = b.ljust(width, b"\0")
    return bytes(x ^ y for x, y in zip(a, b))


def check_freshness(t_received: int, t_now: int, window_ms: int = FRESHNESS_WINDOW_MS) -> bool:
    return abs(t_now - t_received) <= window_ms


# -- canonical encodings ------------------------------------------------------

def encode_scalar(k: int, curve: CurveParams) -> bytes:
    return k.to_bytes(curve.scalar_width, "big")


def encode_point(pt: Point, curve: CurveParams) -> bytes:
    w = curve.coord_width
    if pt.is_infinity:
        return bytes([POINT_TAG_INFINITY]) + bytes(2 * w)
    return bytes([POINT_TAG_AFFINE]) + pt.x.to_bytes(w, "big") + pt.y.to_bytes(w, "big")


def point_size(curve: CurveParams) -> int:
    return 1 + 2 * curve.coord_width


def decode_point(data: bytes, curve: CurveParams) -> Point:
    w = curve.coord_width
    if len(data) != 1 + 2 * w:
        raise MalformedMessage("bad point length")
    tag, body = data[0], data[1:]
    if tag == POINT_TAG_INFINITY:
        if any(body):
            raise InvalidPoint("non-canonical encoding of infinity")
        return INFINITY
    if tag != POINT_TAG_AFFINE:
        raise InvalidPoint(f"unknown point tag 0x{tag:02x}")
    pt = Point(int.from_bytes(body[:w], "big"), int.from_bytes(body[w:], "big"))
    if not curve.contains(pt):
        raise InvalidPoint("point not on curve")
    return pt


def encode_string(text: str | bytes) -> bytes:
    return text.encode("utf-8") if isinstance(text, str) else bytes(text)


def encode_timestamp(millis: int) -> bytes:
    return millis.to_bytes(8, "big")


def require_finite(pt: Point) -> Point:
    if pt.is_infinity:
        raise InvalidPoint("point at infinity is not an acceptable ephemeral")
    return pt


# -- clocks ---------------------------------------------------------------------

class SystemClock:
    """Wall-clock milliseconds, never running backwards within one process."""

    def __init__(self) -> None:
        self._last = 0
        self._lock = threading.Lock()

    def now(self) -> int:
        with self._lock:
            self._last = max(self._last, time.time_ns() // 1_000_000)
            return self._last


class ManualClock:
    """Deterministic clock for tests and the in-memory harness."""

    def __init__(self, start: int = 1_700_000_000_000) -> None:
        self._now = start

    def now(self) -> int:
        return self._now

    def advance(self, millis: int) -> None:
        if millis < 0:
            raise ValueError("clock cannot go backwards")
        self._now += millis


# -- message codec ----------------------------------------------------------------

class Writer:
    def __init__(self, curve: CurveParams) -> None:
        self.curve = curve
        self._chunks: list[bytes] = []

    def point(self, pt: Point) -> "Writer":
        self._chunks.append(encode_point(pt, self.curve))
        return self

    def digest(self, d: bytes) -> "Writer":
        if len(d) != DIGEST_SIZE:
            raise ValueError("digest has wrong width")
        self._chunks.append(d)
        return self

    def timestamp(self, t: int) -> "Writer":
        self._chunks.append(encode_timestamp(t))
        return self

    def blob(self, data: bytes) -> "Writer":
        self._chunks.append(struct.pack(">I", len(data)) + data)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._chunks)


class Reader:
    def __init__(self, data: bytes, curve: CurveParams) -> None:
        self.curve = curve
        self._data = data
        self._pos = 0

    def _take(self, size: int) -> bytes:
        end = self._pos + size
        if end > len(self._data):
            raise MalformedMessage("message truncated")
        chunk = self._data[self._pos:end]
        self._pos = end
        return chunk

    def point(self) -> Point:
        return decode_point(self._take(point_size(self.curve)), self.curve)

    def digest(self) -> bytes:
        return self._take(DIGEST_SIZE)

    def timestamp(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def blob(self) -> bytes:
        (size,) = struct.unpack(">I", self._take(4))
        return self._take(size)

    def finish(self) -> None:
        if self._pos != len(self._data):
            raise MalformedMessage("trailing bytes after message")
