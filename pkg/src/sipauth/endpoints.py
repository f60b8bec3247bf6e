"""Byte-level user and server endpoints driving the scheme step functions.

All three schemes share the same message flow (m1 user->server, m2
server->user, m3 user->server), so the transport only needs two calls per
side. Endpoints own the per-session state; nothing here is shared between
sessions except the server database.
"""

from __future__ import annotations

from .errors import ProtocolError
from .prims import FRESHNESS_WINDOW_MS, hash_parts
from .ecc import random_scalar
from .schemes import enhanced, scheme_module, sureshkumar, zhang
from .schemes.common import DEFAULT_REALM, Credentials, PublicParams, ServerDatabase, ServerKeys


class UserEndpoint:
    def __init__(
        self,
        scheme_id: str,
        creds: Credentials,
        params: PublicParams,
        clock,
        rng,
        window_ms: int = FRESHNESS_WINDOW_MS,
        hid_u: bytes | None = None,
    ) -> None:
        self.scheme_id = scheme_id
        self.scheme = scheme_module(scheme_id)
        self.creds = creds
        self.params = params
        self.clock = clock
        self.rng = rng
        self.window_ms = window_ms
        if scheme_id == enhanced.SCHEME_ID and hid_u is None:
            # kept on the device since registration
            hid_u = hash_parts(creds.id_u)
        self.hid_u = hid_u
        self.r_u: int | None = None
        self.session_key: bytes | None = None
        self._state = None

    def start(self) -> bytes:
        curve = self.params.curve
        self.r_u = random_scalar(self.rng, curve)
        if self.scheme is zhang:
            m1, self._state = zhang.user_start(self.creds, self.params, self.r_u)
        elif self.scheme is enhanced:
            m1, self._state = enhanced.user_start(self.creds, self.params, self.clock.now(), self.r_u, self.hid_u)
        else:
            m1, self._state = sureshkumar.user_start(self.creds, self.params, self.clock.now(), self.r_u)
        return m1.encode(curve)

    def on_m2(self, payload: bytes) -> bytes:
        if self._state is None:
            raise ProtocolError("m2 received before m1 was sent")
        curve = self.params.curve
        m2 = self.scheme.M2.decode(payload, curve)
        if self.scheme is zhang:
            m3, key = zhang.user_finish(m2, self._state)
        else:
            m3, key = self.scheme.user_finish(m2, self._state, self.clock.now(), self.window_ms)
        self.session_key = key
        return m3.encode(curve)


class ServerEndpoint:
    def __init__(
        self,
        scheme_id: str,
        db: ServerDatabase,
        server: ServerKeys,
        clock,
        rng,
        realm: bytes = DEFAULT_REALM,
        window_ms: int = FRESHNESS_WINDOW_MS,
    ) -> None:
        self.scheme_id = scheme_id
        self.scheme = scheme_module(scheme_id)
        self.db = db
        self.server = server
        self.clock = clock
        self.rng = rng
        self.realm = realm
        self.window_ms = window_ms
        self.session_key: bytes | None = None
        self._state = None

    def on_m1(self, payload: bytes) -> bytes:
        curve = self.server.curve
        m1 = self.scheme.M1.decode(payload, curve)
        r_s = random_scalar(self.rng, curve)
        if self.scheme is zhang:
            m2, self._state = zhang.server_challenge(m1, self.server, self.realm, r_s)
        else:
            now = self.clock.now()
            m2, self._state = self.scheme.server_respond(m1, self.db, self.server, now, now, r_s, self.window_ms)
        return m2.encode(curve)

    def on_m3(self, payload: bytes) -> bytes:
        if self._state is None:
            raise ProtocolError("m3 received before m1")
        m3 = self.scheme.M3.decode(payload, self.server.curve)
        if self.scheme is zhang:
            key = zhang.server_verify(m3, self._state, self.db, self.server)
        else:
            key = self.scheme.server_confirm(m3, self._state)
        self.session_key = key
        return key
