"""The enhanced variant of Sureshkumar et al.'s scheme.

Differences from :mod:`.sureshkumar`:

* the server row is keyed by ``h(HIP_u || 0x01)`` and stores
  ``UPW_u = HID_u ^ h(k_s || a_u) ^ HIP_u`` with a per-user random ``a_u``;
* the login request carries ``DP_u = HIP_u ^ h(K_u)`` instead of ``D_u``, so a
  leaked ``r_u`` only ever exposes ``HIP_u = h(ID_u || pw_u)``;
* ``Auth_s``, ``SK`` and ``Conf`` additionally bind ``HID_u`` and both timestamps.

``HID_u`` never leaves the user's device after registration. The user keeps
the value computed at registration time and passes it to :func:`user_start`.

The server verifies ``Auth_u`` before the database lookup, in the published
step order, so a valid ``Auth_u`` does not by itself prove registration.
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from typing import ClassVar

from ..ecc import CurveParams, Point, random_scalar, scalar_mult
from ..errors import AuthFailure, StaleTimestamp
from ..prims import (
    FRESHNESS_WINDOW_MS,
    INDEX_SUFFIX,
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
from .sureshkumar import M2, M3

SCHEME_ID = "enhanced"


def _check_ephemeral(r: int, curve: CurveParams) -> None:
    if not 1 <= r < curve.n:
        raise ValueError("ephemeral scalar must lie in [1, n-1]")


def index_key(hip_u: bytes) -> bytes:
    return hash_parts(hip_u, INDEX_SUFFIX)


@dataclass(frozen=True)
class RegistrationRequest:
    hid_u: bytes
    hip_u: bytes


@dataclass(frozen=True)
class Record:
    scheme_id: ClassVar[str] = SCHEME_ID

    index_key: bytes
    upw_u: bytes
    a_u: int

    @property
    def key(self) -> bytes:
        return self.index_key

    def to_fields(self) -> list[bytes]:
        return [self.index_key, self.upw_u, self.a_u.to_bytes((self.a_u.bit_length() + 7) // 8 or 1, "big")]

    @classmethod
    def from_fields(cls, fields: list[bytes]) -> "Record":
        index, upw_u, a_u = fields
        return cls(index, upw_u, int.from_bytes(a_u, "big"))


@dataclass(frozen=True)
class M1:
    r_u: Point
    dp_u: bytes
    auth_u: bytes
    t_u: int

    def encode(self, curve: CurveParams) -> bytes:
        return Writer(curve).point(self.r_u).digest(self.dp_u).digest(self.auth_u).timestamp(self.t_u).getvalue()

    @classmethod
    def decode(cls, data: bytes, curve: CurveParams) -> "M1":
        r = Reader(data, curve)
        msg = cls(r.point(), r.digest(), r.digest(), r.timestamp())
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
    t_u: int
    t_s: int


def registration_request(creds: Credentials) -> RegistrationRequest:
    return RegistrationRequest(hash_parts(creds.id_u), hash_parts(creds.id_u, creds.pw_u))


def register(
    db: ServerDatabase,
    creds_or_request: Credentials | RegistrationRequest,
    server: ServerKeys,
    a_u: int | None = None,
    rng=None,
) -> Record:
    """Server side of registration; ``a_u`` is drawn from ``rng`` when omitted."""
    curve = server.curve
    req = creds_or_request
    if isinstance(req, Credentials):
        req = registration_request(req)
    if a_u is None:
        if rng is None:
            raise ValueError("either a_u or rng is required")
        a_u = random_scalar(rng, curve)
    if not 1 <= a_u < curve.n:
        raise ValueError("a_u must lie in [1, n-1]")
    mask = hash_parts(encode_scalar(server.k_s, curve), encode_scalar(a_u, curve))
    record = Record(index_key(req.hip_u), xor(xor(req.hid_u, mask), req.hip_u), a_u)
    db.add(record)
    return record


def user_start(
    creds: Credentials,
    params: PublicParams,
    t_u: int,
    r_u: int,
    hid_u: bytes | None = None,
) -> tuple[M1, UserState]:
    """Build the login request.

    ``hid_u`` is the ``h(ID_u)`` kept from registration; if omitted it is
    recomputed, which costs one extra hash.
    """
    curve = params.curve
    _check_ephemeral(r_u, curve)
    if hid_u is None:
        hid_u = hash_parts(creds.id_u)
    R_u = scalar_mult(r_u, curve.P, curve)
    K_u = scalar_mult(r_u, params.q_s, curve)
    hip_u = hash_parts(creds.id_u, creds.pw_u)
    k_enc = encode_point(K_u, curve)
    dp_u = xor(hip_u, hash_parts(k_enc))
    auth_u = hash_parts(hip_u, k_enc, encode_timestamp(t_u))
    return M1(R_u, dp_u, auth_u, t_u), UserState(curve, r_u, K_u, hid_u, hip_u, auth_u, t_u)


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
    k_enc = encode_point(K_s, curve)
    hip_u = xor(m1.dp_u, hash_parts(k_enc))
    expected = hash_parts(hip_u, k_enc, encode_timestamp(m1.t_u))
    if not hmac.compare_digest(expected, m1.auth_u):
        raise AuthFailure("Auth_u mismatch")
    record = db.lookup(index_key(hip_u))
    db.replay.check_and_add(encode_point(R_u, curve) + encode_timestamp(m1.t_u), m1.t_u, t_now)

    R_s = scalar_mult(r_s, curve.P, curve)
    DK_s = scalar_mult(r_s, R_u, curve)
    mask = hash_parts(encode_scalar(server.k_s, curve), encode_scalar(record.a_u, curve))
    hid_u = xor(xor(record.upw_u, mask), hip_u)
    dk_enc = encode_point(DK_s, curve)
    auth_s = hash_parts(hid_u, hip_u, encode_point(R_s, curve), dk_enc, encode_timestamp(t_s))
    sk = hash_parts(k_enc, dk_enc, hip_u, hid_u)
    return M2(R_s, auth_s, t_s), ServerState(sk, m1.auth_u, auth_s, m1.t_u, t_s)


def user_finish(
    m2: M2, state: UserState, t_now: int, window_ms: int = FRESHNESS_WINDOW_MS
) -> tuple[M3, bytes]:
    curve = state.curve
    if not check_freshness(m2.t_s, t_now, window_ms):
        raise StaleTimestamp("t_s outside the freshness window")
    R_s = require_finite(m2.r_s)
    DK_u = scalar_mult(state.r_u, R_s, curve)
    dk_enc = encode_point(DK_u, curve)
    expected = hash_parts(state.hid_u, state.hip_u, encode_point(R_s, curve), dk_enc, encode_timestamp(m2.t_s))
    if not hmac.compare_digest(expected, m2.auth_s):
        raise AuthFailure("Auth_s mismatch")
    sk = hash_parts(encode_point(state.k_u, curve), dk_enc, state.hip_u, state.hid_u)
    conf = hash_parts(state.auth_u, m2.auth_s, sk, encode_timestamp(state.t_u), encode_timestamp(m2.t_s))
    return M3(conf), sk


def server_confirm(m3: M3, state: ServerState) -> bytes:
    expected = hash_parts(
        state.auth_u, state.auth_s, state.sk, encode_timestamp(state.t_u), encode_timestamp(state.t_s)
    )
    if not hmac.compare_digest(expected, m3.conf):
        raise AuthFailure("Conf mismatch")
    return state.sk
