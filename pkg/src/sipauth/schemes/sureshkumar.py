"""Sureshkumar et al.'s ECC-based SIP authentication, as published.

Each protocol step is a pure function of its inputs: ephemerals and clock
readings are arguments, per-session state is returned to the caller. The only
shared mutable object is the :class:`ServerDatabase` (records + replay cache).

Login, with ``P`` the base point and ``Q_s = k_s P``::

    U: R_u = r_u P, K_u = r_u Q_s, D_u = h(ID_u) ^ h(K_u),
       Auth_u = h(HIP_u || K_u || t_u)                   -> {R_u, D_u, Auth_u, t_u}
    S: K_s = k_s R_u, HID_u = D_u ^ h(K_s), HIP_u' = UPW_u ^ h(HID_u || k_s)
       check Auth_u, R_s = r_s P, DK_s = r_s R_u,
       Auth_s = h(HIP_u' || R_s || DK_s || t_s)          <- {R_s, Auth_s, t_s}
    U: check Auth_s, SK = h(K_u || DK_u || HIP_u),
       Conf = h(Auth_u || Auth_s || SK)                  -> {Conf}
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from typing import ClassVar

from ..ecc import CurveParams, Point, scalar_mult
from ..errors import AuthFailure, StaleTimestamp
from ..prims import (
    FRESHNESS_WINDOW_MS,
    Reader,
    Writer,
    check_freshness,
    encode_point,
    encode_scalar,
    encode_timestamp,
    hash_parts,
    require_finite,
    xor,
)
from .common import Credentials, PublicParams, ServerDatabase, ServerKeys

SCHEME_ID = "sureshkumar"


def _check_ephemeral(r: int, curve: CurveParams) -> None:
    if not 1 <= r < curve.n:
        raise ValueError("ephemeral scalar must lie in [1, n-1]")


@dataclass(frozen=True)
class Record:
    scheme_id: ClassVar[str] = SCHEME_ID

    hid_u: bytes
    upw_u: bytes
    rp_u: bytes

    @property
    def key(self) -> bytes:
        return self.hid_u

    def to_fields(self) -> list[bytes]:
        return [self.hid_u, self.upw_u, self.rp_u]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Record":
        hid_u, upw_u, rp_u = fields
        return cls(hid_u, upw_u, rp_u)


@dataclass(frozen=True)
class M1:
    r_u: Point
    d_u: bytes
    auth_u: bytes
    t_u: int

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).point(self.r_u).digest(self.d_u).digest(self.auth_u).timestamp(self.t_u).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M1":
        r = Reader(data, curve)
        msg = cls(r.point(), r.digest(), r.digest(), r.timestamp())
        r.finish()
        return msg


@dataclass(frozen=True)
class M2:
    r_s: Point
    auth_s: bytes
    t_s: int

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).point(self.r_s).digest(self.auth_s).timestamp(self.t_s).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M2":
        r = Reader(data, curve)
        msg = cls(r.point(), r.digest(), r.timestamp())
        r.finish()
        return msg


@dataclass(frozen=True)
class M3:
    conf: bytes

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).digest(self.conf).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M3":
        r = Reader(data, curve)
        msg = cls(r.digest())
        r.finish()
        return msg


@dataclass(frozen=True)
class UserState:
    curve: CurveParams
    r_u: int
    k_u: Point
    hid_u: bytes
    hip_u: bytes
    auth_u: bytes
    t_u: int


@dataclass(frozen=True)
class ServerState:
    sk: bytes
    auth_u: bytes
    auth_s: bytes
    hid_u: bytes


def register(db: ServerDatabase, creds: Credentials, server: ServerKeys) -> Record:
    # user side, sent over the private channel
    hip_u = hash_parts(creds.id_u, creds.pw_u)
    hid_u = hash_parts(creds.id_u)
    rp_u = xor(creds.id_u, creds.pw_u)
    # server side
    upw_u = xor(hash_parts(hid_u, encode_scalar(server.k_s, server.curve)), hip_u)
    record = Record(hid_u, upw_u, rp_u)
    db.add(record)
    return record


def user_start(creds: Credentials, params: PublicParams, t_u: int, r_u: int) -> tuple[M1, UserState]:
    curve = params.curve
    _check_ephemeral(r_u, curve)
    R_u = scalar_mult(r_u, curve.P, curve)
    K_u = scalar_mult(r_u, params.q_s, curve)
    hid_u = hash_parts(creds.id_u)
    hip_u = hash_parts(creds.id_u, creds.pw_u)
    d_u = xor(hid_u, hash_parts(encode_point(K_u, curve)))
    auth_u = hash_parts(hip_u, encode_point(K_u, curve), encode_timestamp(t_u))
    state = UserState(curve, r_u, K_u, hid_u, hip_u, auth_u, t_u)
    return M1(R_u, d_u, auth_u, t_u), state


def server_respond(
    m1: M1,
    db: ServerDatabase,
    server: ServerKeys,
    t_now: int,
    t_s: int,
    r_s: int,
    window_ms: int = FRESHNESS_WINDOW_MS,
) -> tuple[M2, ServerState]:
    curve = server.curve
    if not check_freshness(m1.t_u, t_now, window_ms):
        raise StaleTimestamp("t_u outside the freshness window")
    _check_ephemeral(r_s, curve)
    R_u = require_finite(m1.r_u)
    K_s = scalar_mult(server.k_s, R_u, curve)
    hid_u = xor(m1.d_u, hash_parts(encode_point(K_s, curve)))
    record = db.lookup(hid_u)
    hip_u = xor(record.upw_u, hash_parts(hid_u, encode_scalar(server.k_s, curve)))
    expected = hash_parts(hip_u, encode_point(K_s, curve), encode_timestamp(m1.t_u))
    if not hmac.compare_digest(expected, m1.auth_u):
        raise AuthFailure("Auth_u mismatch")
    db.replay.check_and_add(encode_point(R_u, curve) + encode_timestamp(m1.t_u), m1.t_u, t_now)

    R_s = scalar_mult(r_s, curve.P, curve)
    DK_s = scalar_mult(r_s, R_u, curve)
    auth_s = hash_parts(hip_u, encode_point(R_s, curve), encode_point(DK_s, curve), encode_timestamp(t_s))
    sk = hash_parts(encode_point(K_s, curve), encode_point(DK_s, curve), hip_u)
    return M2(R_s, auth_s, t_s), ServerState(sk, m1.auth_u, auth_s, hid_u)


def user_finish(
    m2: M2, state: UserState, t_now: int, window_ms: int = FRESHNESS_WINDOW_MS
) -> tuple[M3, bytes]:
    curve = state.curve
    if not check_freshness(m2.t_s, t_now, window_ms):
        raise StaleTimestamp("t_s outside the freshness window")
    R_s = require_finite(m2.r_s)
    DK_u = scalar_mult(state.r_u, R_s, curve)
    expected = hash_parts(state.hip_u, encode_point(R_s, curve), encode_point(DK_u, curve), encode_timestamp(m2.t_s))
    if not hmac.compare_digest(expected, m2.auth_s):
        raise AuthFailure("Auth_s mismatch")
    sk = hash_parts(encode_point(state.k_u, curve), encode_point(DK_u, curve), state.hip_u)
    conf = hash_parts(state.auth_u, m2.auth_s, sk)
    return M3(conf), sk


def server_confirm(m3: M3, state: ServerState) -> bytes:
    expected = hash_parts(state.auth_u, state.auth_s, state.sk)
    if not hmac.compare_digest(expected, m3.conf):
        raise AuthFailure("Conf mismatch")
    return state.sk
