"""Quick invariant suite on TOY-17, run by ``sipauth selftest``."""

from __future__ import annotations

import random
from typing import Callable

from .ecc import INFINITY, _add, ecdlp_brute_force, enumerate_points, point_add, scalar_mult, toy17
from .netharness import run_session
from .prims import ManualClock
from .schemes import SCHEMES, new_database, register_user
from .schemes.common import Credentials, ServerKeys


class SelftestFailure(Exception):
    pass


def _expect(condition: bool, message: str = "invariant violated") -> None:
    # explicit check: must survive python -O
    if not condition:
        raise SelftestFailure(message)


def _group_laws() -> None:
    curve = toy17()
    pts = enumerate_points(curve)
    _expect(len(pts) == curve.n, "TOY-17 group should be cyclic of order n")
    for a in pts:
        _expect(point_add(a, INFINITY, curve) == a)
        for b in pts:
            ab = point_add(a, b, curve)
            _expect(ab == point_add(b, a, curve))
            for c in pts:
                _expect(point_add(ab, c, curve) == point_add(a, point_add(b, c, curve), curve))


def _scalar_mult() -> None:
    curve = toy17()
    acc = INFINITY
    for k in range(curve.n):
        _expect(scalar_mult(k, curve.P, curve) == acc)
        acc = _add(acc, curve.P, curve)
    _expect(acc == INFINITY)


def _ecdlp() -> None:
    curve = toy17()
    for k in range(curve.n):
        _expect(ecdlp_brute_force(scalar_mult(k, curve.P, curve), curve.P, curve) == k)


def _dh() -> None:
    curve = toy17()
    rng = random.Random(7)
    for _ in range(1000):
        x, y = rng.randrange(1, curve.n), rng.randrange(1, curve.n)
        xy = scalar_mult(x * y % curve.n, curve.P, curve)
        _expect(scalar_mult(x, scalar_mult(y, curve.P, curve), curve) == xy)
        _expect(scalar_mult(y, scalar_mult(x, curve.P, curve), curve) == xy)


def _key_agreement() -> None:
    curve = toy17()
    rng = random.Random(11)
    server = ServerKeys.generate(curve, rng)
    creds = Credentials("selftest-user", "correct horse")
    for scheme_id in SCHEMES:
        db = new_database(scheme_id)
        register_user(scheme_id, db, creds, server, rng)
        clock = ManualClock()
        for _ in range(50):
            outcome = run_session(scheme_id, creds, db, server, clock=clock, rng=rng)
            _expect(outcome.agreed, f"{scheme_id}: {outcome.status}")
            clock.advance(1)


CHECKS: list[tuple[str, Callable[[], None]]] = [
    ("group laws (exhaustive)", _group_laws),
    ("scalar_mult vs repeated addition", _scalar_mult),
    ("ECDLP brute-force oracle", _ecdlp),
    ("DH consistency (1000 pairs)", _dh),
    ("key agreement, all schemes", _key_agreement),
]


def run(out=print) -> bool:
    ok = True
    for name, check in CHECKS:
        try:
            check()
        except SelftestFailure as exc:
            ok = False
            out(f"FAIL {name}: {exc}")
        else:
            out(f"PASS {name}")
    return ok
