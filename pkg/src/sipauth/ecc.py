"""Short-Weierstrass curves over prime fields, in affine coordinates.

Nothing here is constant-time. Correctness is the only goal: the toy profile is
small enough that every group law can be checked exhaustively, the 256-bit
profile is there for realistic timings.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path

from . import counting
from .config import parse_kv_file, parse_int
from .errors import CurveError, GroupTooLarge, NoSolution, PointNotOnCurve

BRUTE_FORCE_BOUND = 2**20


@dataclass(frozen=True)
class Point:
    """A curve point; ``x is None`` marks the point at infinity."""

    x: int | None
    y: int | None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __repr__(self) -> str:
        if self.is_infinity:
            return "Point(O)"
        return f"Point({self.x}, {self.y})"


INFINITY = Point(None, None)


@dataclass(frozen=True)
class CurveParams:
    q: int
    a: int
    b: int
    P: Point
    n: int
    profile_name: str = "custom"

    def contains(self, pt: Point) -> bool:
        if pt.is_infinity:
            return True
        x, y = pt.x, pt.y
        if not (0 <= x < self.q and 0 <= y < self.q):
            return False
        return (y * y - (x * x * x + self.a * x + self.b)) % self.q == 0

    @cached_property
    def coord_width(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @cached_property
    def scalar_width(self) -> int:
        return (self.n.bit_length() + 7) // 8

    def validate(self) -> None:
        """Check the structural invariants; raises :class:`CurveError`."""
        from sympy import isprime

        if self.q <= 3 or not isprime(self.q):
            raise CurveError(f"q={self.q} is not a prime > 3")
        if not (0 <= self.a < self.q and 0 <= self.b < self.q):
            raise CurveError("coefficients must be reduced mod q")
        if (4 * self.a**3 + 27 * self.b**2) % self.q == 0:
            raise CurveError("singular curve: 4a^3 + 27b^2 = 0 mod q")
        if self.P.is_infinity or not self.contains(self.P):
            raise CurveError(f"base point {self.P} is not on the curve")
        if self.n < 2 or not _mul(self.n, self.P, self).is_infinity:
            raise CurveError(f"n={self.n} does not annihilate the base point")
        if self.n <= BRUTE_FORCE_BOUND and point_order(self.P, self) != self.n:
            raise CurveError(f"n={self.n} is not the exact order of the base point")


def _check(pt: Point, curve: CurveParams) -> None:
    if not curve.contains(pt):
        raise PointNotOnCurve(f"{pt} is not on {curve.profile_name}")


def _add(p1: Point, p2: Point, curve: CurveParams) -> Point:
    if p1.is_infinity:
        return p2
    if p2.is_infinity:
        return p1
    q = curve.q
    if p1.x == p2.x:
        if (p1.y + p2.y) % q == 0:
            return INFINITY
        # doubling; y != 0 here because y == -y was caught above
        slope = (3 * p1.x * p1.x + curve.a) * pow(2 * p1.y, -1, q) % q
    else:
        slope = (p2.y - p1.y) * pow(p2.x - p1.x, -1, q) % q
    x3 = (slope * slope - p1.x - p2.x) % q
    y3 = (slope * (p1.x - x3) - p1.y) % q
    return Point(x3, y3)


def _mul(k: int, pt: Point, curve: CurveParams) -> Point:
    result = INFINITY
    addend = pt
    while k:
        if k & 1:
            result = _add(result, addend, curve)
        addend = _add(addend, addend, curve)
        k >>= 1
    return result


def point_add(p1: Point, p2: Point, curve: CurveParams) -> Point:
    _check(p1, curve)
    _check(p2, curve)
    return _add(p1, p2, curve)


def point_neg(pt: Point, curve: CurveParams) -> Point:
    _check(pt, curve)
    if pt.is_infinity:
        return pt
    return Point(pt.x, (-pt.y) % curve.q)


def scalar_mult(k: int, pt: Point, curve: CurveParams) -> Point:
    """Left-to-right binary double-and-add, counted as one point multiplication."""
    _check(pt, curve)
    if not 0 <= k < curve.n:
        raise ValueError(f"scalar {k} outside [0, n-1]")
    counting.note_point_mult()
    return _mul(k, pt, curve)


def random_scalar(rng: random.Random, curve: CurveParams) -> int:
    """Uniform in [1, n-1]. ``rng`` is any object with ``randrange``."""
    return rng.randrange(1, curve.n)


# -- brute-force oracles for toy curves ---------------------------------------

def enumerate_points(curve: CurveParams) -> list[Point]:
    """All affine solutions by exhaustive scan, plus the point at infinity."""
    if curve.q > BRUTE_FORCE_BOUND:
        raise GroupTooLarge(f"q={curve.q} exceeds brute-force bound")
    squares: dict[int, list[int]] = {}
    for y in range(curve.q):
        squares.setdefault(y * y % curve.q, []).append(y)
    points = [INFINITY]
    for x in range(curve.q):
        rhs = (x**3 + curve.a * x + curve.b) % curve.q
        points.extend(Point(x, y) for y in squares.get(rhs, ()))
    return points


def point_order(pt: Point, curve: CurveParams, bound: int = BRUTE_FORCE_BOUND) -> int:
    acc, k = pt, 1
    while not acc.is_infinity:
        acc = _add(acc, pt, curve)
        k += 1
        if k > bound:
            raise GroupTooLarge(f"order of {pt} exceeds {bound}")
    return k


def ecdlp_brute_force(
    target: Point, base: Point, curve: CurveParams, bound: int = BRUTE_FORCE_BOUND
) -> int:
    """Smallest k in [0, n-1] with k*base == target, by linear scan."""
    if curve.n > bound:
        raise GroupTooLarge(f"n={curve.n} exceeds brute-force bound {bound}")
    _check(target, curve)
    _check(base, curve)
    acc = INFINITY
    for k in range(curve.n):
        if acc == target:
            return k
        acc = _add(acc, base, curve)
    raise NoSolution(f"{target} is not in the subgroup generated by {base}")


# -- profiles -----------------------------------------------------------------

def curve_from_mapping(values: dict[str, str]) -> CurveParams:
    try:
        curve = CurveParams(
            q=parse_int(values["q"]),
            a=parse_int(values["a"]),
            b=parse_int(values["b"]),
            P=Point(parse_int(values["Px"]), parse_int(values["Py"])),
            n=parse_int(values["n"]),
            profile_name=values.get("profile_name", "custom"),
        )
    except KeyError as exc:
        raise CurveError(f"curve profile is missing {exc.args[0]!r}") from None
    curve.validate()
    return curve


_profile_cache: dict[str, CurveParams] = {}


def load_profile(name_or_path: str) -> CurveParams:
    """Load a shipped profile by name (``TOY-17``, ``STD-256``) or a .conf path."""
    if name_or_path in _profile_cache:
        return _profile_cache[name_or_path]
    shipped = resources.files("sipauth") / "profiles" / f"{name_or_path}.conf"
    if shipped.is_file():
        values = parse_kv_file(shipped.read_text(encoding="utf-8"))
    else:
        path = Path(name_or_path)
        if not path.is_file():
            raise CurveError(f"unknown curve profile {name_or_path!r}")
        values = parse_kv_file(path.read_text(encoding="utf-8"))
    curve = curve_from_mapping(values)
    _profile_cache[name_or_path] = curve
    return curve


def toy17() -> CurveParams:
    return load_profile("TOY-17")


def std256() -> CurveParams:
    return load_profile("STD-256")
