"""Transport: framed messages, a scripted in-memory channel, and a TCP server/client.

Frame layout: ``scheme_id (1) | msg_index (1) | payload_len (4, BE) | payload``.
Indices 1-3 carry the handshake; index 4 carries the post-handshake demo alert
(client to server) and its acknowledgement. A protocol rejection is signalled
by a single byte ``0x80 | error_code`` followed by closing the connection.

The alert protection (AES-256-CTR then HMAC-SHA256, keys derived as
``h(SK || label)``) is demo plumbing only. The schemes themselves say nothing
about protecting traffic after the handshake.
"""

from __future__ import annotations

import hmac
import logging
import os
import secrets
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .adversary import SessionTranscript
from .ecc import load_profile
from .endpoints import ServerEndpoint, UserEndpoint
from .errors import AuthFailure, MalformedMessage, ProtocolError, TransportClosed, error_from_code
from .prims import FRESHNESS_WINDOW_MS, SystemClock, decode_point, encode_point, hash_parts
from .schemes import SCHEME_BY_WIRE_ID, WIRE_IDS
from .schemes.common import DEFAULT_REALM, Credentials, PublicParams, ServerDatabase, ServerKeys

log = logging.getLogger(__name__)

USER_TO_SERVER = "U->S"
SERVER_TO_USER = "S->U"
ALERT_INDEX = 4
ERROR_FLAG = 0x80
MAX_PAYLOAD = 1 << 16


@dataclass(frozen=True)
class Frame:
    scheme_id: int
    msg_index: int
    payload: bytes

    def __post_init__(self) -> None:
        if self.scheme_id not in SCHEME_BY_WIRE_ID:
            raise MalformedMessage(f"unknown scheme id {self.scheme_id}")
        if not 1 <= self.msg_index <= ALERT_INDEX:
            raise MalformedMessage(f"invalid message index {self.msg_index}")

    @classmethod
    def of(cls, scheme: str, msg_index: int, payload: bytes) -> "Frame":
        return cls(WIRE_IDS[scheme], msg_index, payload)

    @property
    def scheme(self) -> str:
        return SCHEME_BY_WIRE_ID[self.scheme_id]

    def encode(self) -> bytes:
        return struct.pack(">BBI", self.scheme_id, self.msg_index, len(self.payload)) + self.payload

    @classmethod
    def decode(cls, data: bytes) -> "Frame":
        if len(data) < 6:
            raise MalformedMessage("frame header truncated")
        scheme_id, msg_index, size = struct.unpack(">BBI", data[:6])
        if size != len(data) - 6:
            raise MalformedMessage("payload length mismatch")
        return cls(scheme_id, msg_index, data[6:])

    def tampered(self, offset: int, mask: int) -> "Frame":
        if not 0 <= offset < len(self.payload):
            raise ValueError(f"offset {offset} outside payload of {len(self.payload)} bytes")
        if not 1 <= mask <= 0xFF:
            raise ValueError("xor mask must be a non-zero byte")
        body = bytearray(self.payload)
        body[offset] ^= mask
        return Frame(self.scheme_id, self.msg_index, bytes(body))


# -- scripted in-memory channel -------------------------------------------------

@dataclass(frozen=True)
class Deliver:
    pass


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Replay:
    """Substitute a previously recorded frame for the one in flight."""

    frame: Frame


@dataclass(frozen=True)
class Tamper:
    byte_offset: int
    xor_mask: int = 0x01


@dataclass(frozen=True)
class Delay:
    """Advance the shared clock before the next frame is handled."""

    millis: int


class ChannelScript:
    """Actions applied, in order, to successive frames in flight.

    ``Delay`` actions do not consume a frame; every other action does. Frames
    beyond the end of the script are delivered untouched.
    """

    def __init__(self, actions: Iterable = ()) -> None:
        self.actions = list(actions)
        self._pos = 0

    def apply(self, frame: Frame, clock) -> Frame | None:
        while self._pos < len(self.actions) and isinstance(self.actions[self._pos], Delay):
            clock.advance(self.actions[self._pos].millis)
            self._pos += 1
        if self._pos >= len(self.actions):
            return frame
        action = self.actions[self._pos]
        self._pos += 1
        if isinstance(action, Drop):
            return None
        if isinstance(action, Replay):
            return action.frame
        if isinstance(action, Tamper):
            return frame.tampered(action.byte_offset, action.xor_mask)
        return frame


@dataclass
class SessionOutcome:
    scheme_id: str
    agreed: bool
    error: str | None = None
    rejected_by: str | None = None
    user_key: bytes | None = None
    server_key: bytes | None = None
    r_u: int | None = None
    frames: list[tuple[str, Frame]] = field(default_factory=list)
    params: PublicParams | None = None

    @property
    def status(self) -> str:
        if self.agreed:
            return "keys-agree"
        return f"rejected({self.error}, {self.rejected_by})"


def run_session(
    scheme_id: str,
    creds: Credentials,
    db: ServerDatabase,
    server: ServerKeys,
    channel: ChannelScript | None = None,
    clock=None,
    rng=None,
    server_rng=None,
    realm: bytes = DEFAULT_REALM,
    window_ms: int = FRESHNESS_WINDOW_MS,
) -> SessionOutcome:
    """Drive one full login through the scripted channel.

    Deterministic when ``clock`` is a :class:`~sipauth.prims.ManualClock` and
    the random sources are seeded. ``frames`` records what actually travelled
    on the wire (after tampering or substitution), i.e. what an eavesdropper
    would capture.
    """
    channel = channel or ChannelScript()
    clock = clock or SystemClock()
    rng = rng or secrets.SystemRandom()
    server_rng = server_rng or rng
    params = server.public(realm)
    user = UserEndpoint(scheme_id, creds, params, clock, rng, window_ms)
    srv = ServerEndpoint(scheme_id, db, server, clock, server_rng, realm, window_ms)
    outcome = SessionOutcome(scheme_id, agreed=False, params=params)

    def send(direction: str, frame: Frame) -> Frame:
        delivered = channel.apply(frame, clock)
        if delivered is None:
            raise TransportClosed(f"frame {frame.msg_index} dropped")
        outcome.frames.append((direction, delivered))
        return delivered

    def expect(frame: Frame, index: int) -> bytes:
        if frame.scheme != scheme_id or frame.msg_index != index:
            raise MalformedMessage(f"expected message {index} of {scheme_id}")
        return frame.payload

    try:
        stage = "user"
        m1 = Frame.of(scheme_id, 1, user.start())
        outcome.r_u = user.r_u
        stage = "server"
        m2 = Frame.of(scheme_id, 2, srv.on_m1(expect(send(USER_TO_SERVER, m1), 1)))
        stage = "user"
        m3 = Frame.of(scheme_id, 3, user.on_m2(expect(send(SERVER_TO_USER, m2), 2)))
        stage = "server"
        srv.on_m3(expect(send(USER_TO_SERVER, m3), 3))
    except ProtocolError as exc:
        outcome.error = type(exc).__name__
        outcome.rejected_by = stage
    outcome.user_key = user.session_key
    outcome.server_key = srv.session_key
    outcome.agreed = (
        outcome.error is None and user.session_key is not None and user.session_key == srv.session_key
    )
    return outcome


def record_transcripts(outcome: SessionOutcome, session_id: int = 0) -> SessionTranscript:
    """The eavesdropper's view of a harness session: exactly the public frames."""
    payloads = {}
    for _, frame in outcome.frames:
        payloads.setdefault(frame.msg_index, frame.payload)
    if set(payloads) != {1, 2, 3}:
        raise ValueError("session did not carry all three handshake messages")
    return SessionTranscript(outcome.scheme_id, payloads[1], payloads[2], payloads[3], outcome.params,
                             session_id=session_id)


@dataclass
class ReplayOutcome:
    accepted: bool
    error: str | None = None
    stage: str | None = None
    server_key: bytes | None = None


def replay_transcript(
    transcript: SessionTranscript,
    db: ServerDatabase,
    server: ServerKeys,
    clock,
    rng,
    realm: bytes = DEFAULT_REALM,
    window_ms: int = FRESHNESS_WINDOW_MS,
) -> ReplayOutcome:
    """Re-inject a recorded m1 and m3 to a server, without knowing any secret."""
    srv = ServerEndpoint(transcript.scheme_id, db, server, clock, rng, realm, window_ms)
    try:
        srv.on_m1(transcript.m1)
    except ProtocolError as exc:
        return ReplayOutcome(False, type(exc).__name__, "m1")
    try:
        key = srv.on_m3(transcript.m3)
    except ProtocolError as exc:
        return ReplayOutcome(False, type(exc).__name__, "m3")
    return ReplayOutcome(True, server_key=key)


# -- transcript log -------------------------------------------------------------

def write_transcript_log(path: str | Path, transcripts: Iterable[SessionTranscript], append: bool = True) -> None:
    """One frame per line: ``<session> <direction> <scheme> <index> <hex payload>``."""
    path = Path(path)
    transcripts = list(transcripts)
    if not transcripts:
        return
    params = transcripts[0].params
    fresh = not (append and path.exists() and path.stat().st_size)
    if not fresh:
        existing = _read_header(path.read_text(encoding="ascii"))
        if existing.get("profile") != params.curve.profile_name or existing.get(
            "q_s") != encode_point(params.q_s, params.curve).hex():
            raise ValueError(f"{path} was recorded under different public parameters")
    with path.open("a" if not fresh else "w", encoding="ascii") as fh:
        if fresh:
            fh.write("# sipauth transcript log\n")
            fh.write(f"# profile={params.curve.profile_name}\n")
            fh.write(f"# q_s={encode_point(params.q_s, params.curve).hex()}\n")
            fh.write(f"# realm={params.realm.hex()}\n")
        for t in transcripts:
            wire = WIRE_IDS[t.scheme_id]
            for index, direction, payload in (
                (1, USER_TO_SERVER, t.m1), (2, SERVER_TO_USER, t.m2), (3, USER_TO_SERVER, t.m3)
            ):
                fh.write(f"{t.session_id} {direction} {wire} {index} {payload.hex()}\n")


def next_session_id(path: str | Path) -> int:
    path = Path(path)
    if not path.exists():
        return 1
    ids = [int(line.split()[0]) for line in path.read_text(encoding="ascii").splitlines()
           if line.strip() and not line.startswith("#")]
    return max(ids, default=0) + 1


def _read_header(text: str) -> dict[str, str]:
    header = {}
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                header[key] = value
    return header


def read_transcript_log(path: str | Path, curve_profile: str | None = None) -> list[SessionTranscript]:
    text = Path(path).read_text(encoding="ascii")
    header = _read_header(text)
    curve = load_profile(curve_profile or header["profile"])
    params = PublicParams(curve, decode_point(bytes.fromhex(header["q_s"]), curve),
                          bytes.fromhex(header.get("realm", DEFAULT_REALM.hex())))
    sessions: dict[int, dict] = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        sid, _direction, wire, index, payload = line.split()
        entry = sessions.setdefault(int(sid), {"scheme": SCHEME_BY_WIRE_ID[int(wire)]})
        entry[int(index)] = bytes.fromhex(payload)
    return [
        SessionTranscript(e["scheme"], e[1], e[2], e[3], params, session_id=sid)
        for sid, e in sorted(sessions.items())
        if {1, 2, 3} <= set(e)
    ]


# -- post-handshake demo alert ---------------------------------------------------

def fingerprint(session_key: bytes) -> str:
    return hash_parts(session_key)[:8].hex()


def _alert_keys(session_key: bytes) -> tuple[bytes, bytes]:
    return hash_parts(session_key, b"sipauth alert enc"), hash_parts(session_key, b"sipauth alert mac")


def seal_alert(session_key: bytes, plaintext: bytes) -> bytes:
    enc_key, mac_key = _alert_keys(session_key)
    nonce = os.urandom(16)
    encryptor = Cipher(algorithms.AES(enc_key), modes.CTR(nonce)).encryptor()
    body = nonce + encryptor.update(plaintext) + encryptor.finalize()
    return body + hmac.new(mac_key, body, "sha256").digest()


def open_alert(session_key: bytes, sealed: bytes) -> bytes:
    enc_key, mac_key = _alert_keys(session_key)
    if len(sealed) < 48:
        raise MalformedMessage("sealed alert too short")
    body, tag = sealed[:-32], sealed[-32:]
    if not hmac.compare_digest(hmac.new(mac_key, body, "sha256").digest(), tag):
        raise AuthFailure("alert MAC mismatch")
    decryptor = Cipher(algorithms.AES(enc_key), modes.CTR(body[:16])).decryptor()
    return decryptor.update(body[16:]) + decryptor.finalize()


# -- sockets -------------------------------------------------------------------------

def _recv_exact(sock: socket.socket, size: int) -> bytes:
    chunks = []
    while size:
        chunk = sock.recv(size)
        if not chunk:
            raise TransportClosed("connection closed mid-frame")
        chunks.append(chunk)
        size -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> Frame:
    first = _recv_exact(sock, 1)
    if first[0] & ERROR_FLAG:
        raise error_from_code(first[0] & ~ERROR_FLAG)
    rest = _recv_exact(sock, 5)
    size = struct.unpack(">I", rest[1:])[0]
    if size > MAX_PAYLOAD:
        raise MalformedMessage("frame too large")
    return Frame.decode(first + rest + _recv_exact(sock, size))


def send_error(sock: socket.socket, exc: ProtocolError) -> None:
    try:
        sock.sendall(bytes([ERROR_FLAG | exc.code]))
    except OSError:
        pass


class _Handler(socketserver.BaseRequestHandler):
    server: "SipAuthServer"

    def handle(self) -> None:
        srv = self.server
        sock = self.request
        sock.settimeout(srv.io_timeout)
        endpoint = ServerEndpoint(srv.scheme_id, srv.db, srv.keys, srv.clock, srv.rng, srv.realm, srv.window_ms)
        frames: list[tuple[str, Frame]] = []
        try:
            m1 = read_frame(sock)
            frames.append((USER_TO_SERVER, m1))
            self._expect(m1, 1)
            m2 = Frame.of(srv.scheme_id, 2, endpoint.on_m1(m1.payload))
            frames.append((SERVER_TO_USER, m2))
            sock.sendall(m2.encode())
            m3 = read_frame(sock)
            frames.append((USER_TO_SERVER, m3))
            self._expect(m3, 3)
            key = endpoint.on_m3(m3.payload)
            alert = read_frame(sock)
            self._expect(alert, ALERT_INDEX)
            message = open_alert(key, alert.payload)
            fp = fingerprint(key)
            log.info("session established scheme=%s sk_fp=%s alert=%r", srv.scheme_id, fp, message)
            srv.record(fp, message, frames)
            ack = seal_alert(key, b"ACK " + message[:64])
            sock.sendall(Frame.of(srv.scheme_id, ALERT_INDEX, ack).encode())
        except ProtocolError as exc:
            log.info("session rejected scheme=%s error=%s", srv.scheme_id, type(exc).__name__)
            srv.record_failure(type(exc).__name__)
            send_error(sock, exc)
        except OSError as exc:
            log.info("connection error: %s", exc)

    def _expect(self, frame: Frame, index: int) -> None:
        if frame.scheme != self.server.scheme_id or frame.msg_index != index:
            raise MalformedMessage(f"expected message {index}")


class SipAuthServer(socketserver.ThreadingTCPServer):
    """Concurrent login server: one handler thread per connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(
        self,
        address: tuple[str, int],
        db: ServerDatabase,
        scheme_id: str,
        keys: ServerKeys,
        realm: bytes = DEFAULT_REALM,
        window_ms: int = FRESHNESS_WINDOW_MS,
        clock=None,
        rng=None,
        io_timeout: float = 10.0,
    ) -> None:
        super().__init__(address, _Handler)
        self.db = db
        self.scheme_id = scheme_id
        self.keys = keys
        self.realm = realm
        self.window_ms = window_ms
        self.clock = clock or SystemClock()
        self.rng = rng or secrets.SystemRandom()
        self.io_timeout = io_timeout
        self.established: list[tuple[str, bytes]] = []
        self.failures: list[str] = []
        self.session_frames: list[list[tuple[str, Frame]]] = []
        self._log_lock = threading.Lock()
        self._thread: threading.Thread | None = None

    def record(self, fp: str, message: bytes, frames) -> None:
        with self._log_lock:
            self.established.append((fp, message))
            self.session_frames.append(frames)

    def record_failure(self, error: str) -> None:
        with self._log_lock:
            self.failures.append(error)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]

    def start(self) -> "SipAuthServer":
        self._thread = threading.Thread(target=self.serve_forever, name="sipauth-server", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join()


def serve(address: tuple[str, int], db: ServerDatabase, scheme_id: str, keys: ServerKeys, **options) -> SipAuthServer:
    """Bind and start serving in a background thread."""
    return SipAuthServer(address, db, scheme_id, keys, **options).start()


@dataclass
class ClientResult:
    session_key: bytes
    fingerprint: str
    ack: bytes
    frames: list[tuple[str, Frame]]
    r_u: int | None = None


def connect(
    address: tuple[str, int],
    creds: Credentials,
    scheme_id: str,
    params: PublicParams,
    alert: bytes = b"EMERGENCY: patient vitals critical",
    clock=None,
    rng=None,
    window_ms: int = FRESHNESS_WINDOW_MS,
    timeout: float = 10.0,
) -> ClientResult:
    """Log in over TCP, then send one protected alert. Raises on rejection."""
    clock = clock or SystemClock()
    rng = rng or secrets.SystemRandom()
    user = UserEndpoint(scheme_id, creds, params, clock, rng, window_ms)
    frames: list[tuple[str, Frame]] = []
    with socket.create_connection(address, timeout=timeout) as sock:
        m1 = Frame.of(scheme_id, 1, user.start())
        frames.append((USER_TO_SERVER, m1))
        sock.sendall(m1.encode())
        m2 = read_frame(sock)
        frames.append((SERVER_TO_USER, m2))
        if m2.scheme != scheme_id or m2.msg_index != 2:
            raise MalformedMessage("expected message 2")
        try:
            m3 = Frame.of(scheme_id, 3, user.on_m2(m2.payload))
        except ProtocolError as exc:
            send_error(sock, exc)
            raise
        frames.append((USER_TO_SERVER, m3))
        sock.sendall(m3.encode())
        key = user.session_key
        sock.sendall(Frame.of(scheme_id, ALERT_INDEX, seal_alert(key, alert)).encode())
        reply = read_frame(sock)
        if reply.msg_index != ALERT_INDEX:
            raise MalformedMessage("expected alert acknowledgement")
        ack = open_alert(key, reply.payload)
    fp = fingerprint(key)
    log.info("session established scheme=%s sk_fp=%s", scheme_id, fp)
    return ClientResult(key, fp, ack, frames, user.r_u)
