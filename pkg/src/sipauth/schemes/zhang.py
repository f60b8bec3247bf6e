"""Zhang et al.'s ECC-based SIP authentication, as published.

There are no timestamps, and the server answers the first message before it
knows who is asking; the user lookup only happens on message 3. Both
properties are kept on purpose: they are what the replay test exercises.

The published user-side key step uses two undefined scalars; the user here
computes ``DK_u = r_u R_s``, which is what the following ``Auth_s`` check needs.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from typing import ClassVar

from ..ecc import CurveParams, Point, scalar_mult
from ..errors import AuthFailure
from ..prims import Reader, Writer, encode_point, encode_scalar, hash_parts, require_finite, xor
from .common import Credentials, PublicParams, ServerDatabase, ServerKeys

SCHEME_ID = "zhang"


def _check_ephemeral(r: int, curve: CurveParams) -> None:
    if not 1 <= r < curve.n:
        raise ValueError("ephemeral scalar must lie in [1, n-1]")


def recover_identity(hid_u: bytes, mask: bytes) -> bytes:
    """Undo ``HID_u = ID_u ^ h(R_u || K_u)``, dropping the XOR zero padding."""
    return xor(hid_u, mask).rstrip(b"\0")


@dataclass(frozen=True)
class Record:
    scheme_id: ClassVar[str] = SCHEME_ID

    id_u: bytes
    vpw_u: bytes

    @property
    def key(self) -> bytes:
        return self.id_u

    def to_fields(self) -> list[bytes]:
        return [self.id_u, self.vpw_u]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Record":
        id_u, vpw_u = fields
        return cls(id_u, vpw_u)


@dataclass(frozen=True)
class M1:
    hid_u: bytes
    r_u: Point

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).blob(self.hid_u).point(self.r_u).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M1":
        r = Reader(data, curve)
        msg = cls(r.blob(), r.point())
        r.finish()
        return msg


@dataclass(frozen=True)
class M2:
    realm: bytes
    r_s: Point
    auth_s: bytes

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).blob(self.realm).point(self.r_s).digest(self.auth_s).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M2":
        r = Reader(data, curve)
        msg = cls(r.blob(), r.point(), r.digest())
        r.finish()
        return msg


@dataclass(frozen=True)
class M3:
    realm: bytes
    auth_u: bytes

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).blob(self.realm).digest(self.auth_u).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M3":
        r = Reader(data, curve)
        msg = cls(r.blob(), r.digest())
        r.finish()
        return msg


@dataclass(frozen=True)
class UserState:
    creds: Credentials
    curve: CurveParams
    r_u: int
    R_u: Point
    k_u: Point


@dataclass(frozen=True)
class ServerState:
    realm: bytes
    hid_u: bytes
    R_u: Point
    R_s: Point
    k_s: Point
    dk_s: Point


def register(db: ServerDatabase, creds: Credentials, server: ServerKeys) -> Record:
    k_enc = encode_scalar(server.k_s, server.curve)
    vpw_u = xor(hash_parts(creds.id_u, k_enc), hash_parts(creds.id_u, creds.pw_u))
    record = Record(creds.id_u, vpw_u)
    db.add(record)
    return record


def user_start(creds: Credentials, params: PublicParams, r_u: int) -> tuple[M1, UserState]:
    curve = params.curve
    _check_ephemeral(r_u, curve)
    R_u = scalar_mult(r_u, curve.P, curve)
    K_u = scalar_mult(r_u, params.q_s, curve)
    hid_u = xor(creds.id_u, hash_parts(encode_point(R_u, curve), encode_point(K_u, curve)))
    return M1(hid_u, R_u), UserState(creds, curve, r_u, R_u, K_u)


def server_challenge(
    m1: M1, server: ServerKeys, realm: bytes, r_s: int
) -> tuple[M2, ServerState]:
    curve = server.curve
    _check_ephemeral(r_s, curve)
    R_u = require_finite(m1.r_u)
    R_s = scalar_mult(r_s, curve.P, curve)
    K_s = scalar_mult(server.k_s, R_u, curve)
    DK_s = scalar_mult(r_s, R_u, curve)
    auth_s = hash_parts(
        encode_point(K_s, curve), encode_point(DK_s, curve), encode_point(R_s, curve), encode_point(R_u, curve)
    )
    return M2(realm, R_s, auth_s), ServerState(realm, m1.hid_u, R_u, R_s, K_s, DK_s)


def _auth_u(realm: bytes, K: Point, DK: Point, R_s: Point, R_u: Point, hip: bytes, curve: CurveParams) -> bytes:
    return hash_parts(
        realm, encode_point(K, curve), encode_point(DK, curve), encode_point(R_s, curve), encode_point(R_u, curve), hip
    )


def _session_key(id_u: bytes, DK: Point, K: Point, R_u: Point, R_s: Point, curve: CurveParams) -> bytes:
    return hash_parts(
        id_u, encode_point(DK, curve), encode_point(K, curve), encode_point(R_u, curve), encode_point(R_s, curve)
    )


def user_finish(m2: M2, state: UserState) -> tuple[M3, bytes]:
    curve = state.curve
    R_s = require_finite(m2.r_s)
    DK_u = scalar_mult(state.r_u, R_s, curve)
    expected = hash_parts(
        encode_point(state.k_u, curve), encode_point(DK_u, curve), encode_point(R_s, curve), encode_point(state.R_u, curve)
    )
    if not hmac.compare_digest(expected, m2.auth_s):
        raise AuthFailure("Auth_s mismatch")
    creds = state.creds
    sk = _session_key(creds.id_u, DK_u, state.k_u, state.R_u, R_s, curve)
    hip_u = hash_parts(creds.id_u, creds.pw_u)
    auth_u = _auth_u(m2.realm, state.k_u, DK_u, R_s, state.R_u, hip_u, curve)
    return M3(m2.realm, auth_u), sk


def server_verify(m3: M3, state: ServerState, db: ServerDatabase, server: ServerKeys) -> bytes:
    curve = server.curve
    if not hmac.compare_digest(m3.realm, state.realm):
        raise AuthFailure("realm echoed in m3 does not match")
    id_u = recover_identity(state.hid_u, hash_parts(encode_point(state.R_u, curve), encode_point(state.k_s, curve)))
    record = db.lookup(id_u)
    hip_u = xor(record.vpw_u, hash_parts(id_u, encode_scalar(server.k_s, curve)))
    expected = _auth_u(state.realm, state.k_s, state.dk_s, state.R_s, state.R_u, hip_u, curve)
    if not hmac.compare_digest(expected, m3.auth_u):
        raise AuthFailure("Auth_u mismatch")
    return _session_key(id_u, state.dk_s, state.k_s, state.R_u, state.R_s, curve)
