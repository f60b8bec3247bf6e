"""Session-scoped operation counters.

Counters live in a :class:`contextvars.ContextVar`, so each thread or asyncio
task sees only the counter it installed. Code outside a ``counting`` block is
not instrumented at all.
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Iterator


@dataclass
class OpCounter:
    point_mults: int = 0
    hashes: int = 0


_active: ContextVar[OpCounter | None] = ContextVar("sipauth_op_counter", default=None)


@contextmanager
def counting(counter: OpCounter) -> Iterator[OpCounter]:
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)


def note_point_mult() -> None:
    counter = _active.get()
    if counter is not None:
        counter.point_mults += 1


def note_hash() -> None:
    counter = _active.get()
    if counter is not None:
        counter.hashes += 1
