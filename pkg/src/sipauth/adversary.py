"""Ephemeral-leakage adversary: transcripts, leaked ``r_u``, offline guessing.

The attack functions only receive public transcript data plus the leaked
ephemeral ``r_u``. None of them takes a server key or a database, so they can
only use what an eavesdropper with a session-exposure oracle would have.

Against the enhanced scheme the only value a leaked ``r_u`` unlocks is
``HIP_u = h(ID_u || pw_u)``. There is deliberately no identity-only oracle
for it: :func:`identity_oracle` raises :class:`NoIdentityOracle`, and the
only attack offered is the joint scan over ``id_dict x pw_dict``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .ecc import Point, scalar_mult
from .errors import NoIdentityOracle, NoMatch
from .prims import encode_point, encode_timestamp, hash_parts, xor
from .schemes import enhanced, scheme_module, sureshkumar, zhang
from .schemes.common import PublicParams


@dataclass(frozen=True)
class SessionTranscript:
    scheme_id: str
    m1: bytes
    m2: bytes
    m3: bytes
    params: PublicParams
    leaked_ephemerals: dict = field(default_factory=dict, compare=False)
    session_id: int = 0

    def __post_init__(self) -> None:
        # fail early on transcripts that do not parse under the named scheme
        self.messages()

    def messages(self):
        mod = scheme_module(self.scheme_id)
        curve = self.params.curve
        return mod.M1.decode(self.m1, curve), mod.M2.decode(self.m2, curve), mod.M3.decode(self.m3, curve)

    @property
    def R_u(self) -> Point:
        return self.messages()[0].r_u

    def with_leak(self, **ephemerals: int) -> "SessionTranscript":
        return SessionTranscript(
            self.scheme_id, self.m1, self.m2, self.m3, self.params,
            {**self.leaked_ephemerals, **ephemerals}, self.session_id,
        )


@dataclass(frozen=True)
class Dictionary:
    entries: tuple[bytes, ...]
    kind: str = "password"

    def __post_init__(self) -> None:
        entries = tuple(e.encode("utf-8") if isinstance(e, str) else bytes(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("dictionary must not be empty")
        if len(set(entries)) != len(entries):
            raise ValueError("dictionary entries must be unique")
        if self.kind not in ("identity", "password"):
            raise ValueError("kind must be 'identity' or 'password'")

    @classmethod
    def from_file(cls, path: str | Path, kind: str = "password") -> "Dictionary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        seen: dict[str, None] = {}
        for line in lines:
            if line:
                seen.setdefault(line)
        return cls(tuple(seen), kind)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _entries(d: Dictionary | Iterable[str | bytes]) -> Sequence[bytes]:
    if isinstance(d, Dictionary):
        return d.entries
    return [e.encode("utf-8") if isinstance(e, str) else bytes(e) for e in d]


@dataclass
class AttackReport:
    scheme_id: str
    success: bool = False
    recovered_id: bytes | None = None
    recovered_pw: bytes | None = None
    guesses_tried: int = 0
    oracle_checks: int = 0
    wall_time: float = 0.0

    def to_record(self) -> str:
        def show(v: bytes | None) -> str:
            if v is None:
                return "-"
            return v.decode("utf-8", errors="backslashreplace")

        return "\n".join([
            f"scheme: {self.scheme_id}",
            f"success: {str(self.success).lower()}",
            f"recovered_id: {show(self.recovered_id)}",
            f"recovered_pw: {show(self.recovered_pw)}",
            f"guesses_tried: {self.guesses_tried}",
            f"oracle_checks: {self.oracle_checks}",
            f"wall_time_s: {self.wall_time:.6f}",
        ])


def match_session(transcripts: Iterable[SessionTranscript], r_u: int) -> SessionTranscript:
    """Find the captured session whose ``R_u`` equals ``r_u * P``."""
    cache: dict[object, Point] = {}
    for t in transcripts:
        curve = t.params.curve
        if not 1 <= r_u < curve.n:
            continue
        if curve not in cache:
            cache[curve] = scalar_mult(r_u, curve.P, curve)
        if t.R_u == cache[curve]:
            return t
    raise NoMatch("no captured session matches the leaked ephemeral")


def _require(t: SessionTranscript, scheme_id: str, r_u: int) -> tuple:
    if t.scheme_id != scheme_id:
        raise ValueError(f"transcript is {t.scheme_id!r}, attack expects {scheme_id!r}")
    match_session([t], r_u)
    curve, q_s = t.params.curve, t.params.q_s
    return t.messages(), curve, scalar_mult(r_u, q_s, curve)


def identity_oracle(t: SessionTranscript, r_u: int) -> Callable[[bytes], bool]:
    """A predicate confirming an identity guess from the transcript alone."""
    if t.scheme_id == sureshkumar.SCHEME_ID:
        (m1, _, _), curve, K_u = _require(t, sureshkumar.SCHEME_ID, r_u)
        hid_u = xor(m1.d_u, hash_parts(encode_point(K_u, curve)))
        return lambda guess: hash_parts(guess) == hid_u
    if t.scheme_id == zhang.SCHEME_ID:
        (m1, _, _), curve, K_u = _require(t, zhang.SCHEME_ID, r_u)
        id_u = zhang.recover_identity(m1.hid_u, hash_parts(encode_point(m1.r_u, curve), encode_point(K_u, curve)))
        return lambda guess: guess == id_u
    raise NoIdentityOracle(f"{t.scheme_id} transcripts carry no identity-only verifier")


def attack_sureshkumar(t: SessionTranscript, r_u: int, id_dict, pw_dict) -> AttackReport:
    """Guess the identity against ``HID_u``, then the password against ``Auth_u``."""
    start = time.perf_counter()
    (m1, _, _), curve, K_u = _require(t, sureshkumar.SCHEME_ID, r_u)
    report = AttackReport(sureshkumar.SCHEME_ID)
    k_enc = encode_point(K_u, curve)
    hid_u = xor(m1.d_u, hash_parts(k_enc))
    for guess in _entries(id_dict):
        report.guesses_tried += 1
        report.oracle_checks += 1
        if hash_parts(guess) == hid_u:
            report.recovered_id = guess
            break
    if report.recovered_id is not None:
        t_enc = encode_timestamp(m1.t_u)
        for guess in _entries(pw_dict):
            report.guesses_tried += 1
            report.oracle_checks += 1
            if hash_parts(hash_parts(report.recovered_id, guess), k_enc, t_enc) == m1.auth_u:
                report.recovered_pw = guess
                report.success = True
                break
    report.wall_time = time.perf_counter() - start
    return report


def attack_zhang(t: SessionTranscript, r_u: int, pw_dict) -> AttackReport:
    """Unblind ``ID_u`` directly, then guess the password against ``Auth_u``."""
    start = time.perf_counter()
    (m1, m2, m3), curve, K_u = _require(t, zhang.SCHEME_ID, r_u)
    report = AttackReport(zhang.SCHEME_ID)
    id_u = zhang.recover_identity(m1.hid_u, hash_parts(encode_point(m1.r_u, curve), encode_point(K_u, curve)))
    report.recovered_id = id_u
    DK_u = scalar_mult(r_u, m2.r_s, curve)
    fixed = (
        m2.realm, encode_point(K_u, curve), encode_point(DK_u, curve),
        encode_point(m2.r_s, curve), encode_point(m1.r_u, curve),
    )
    for guess in _entries(pw_dict):
        report.guesses_tried += 1
        report.oracle_checks += 1
        if hash_parts(*fixed, hash_parts(id_u, guess)) == m3.auth_u:
            report.recovered_pw = guess
            report.success = True
            break
    report.wall_time = time.perf_counter() - start
    return report


def attack_enhanced_joint(t: SessionTranscript, r_u: int, id_dict, pw_dict) -> AttackReport:
    """Scan the product dictionary against ``HIP_u``; the only verifier there is."""
    start = time.perf_counter()
    (m1, _, _), curve, K_u = _require(t, enhanced.SCHEME_ID, r_u)
    report = AttackReport(enhanced.SCHEME_ID)
    hip_u = xor(m1.dp_u, hash_parts(encode_point(K_u, curve)))
    passwords = _entries(pw_dict)
    for id_guess in _entries(id_dict):
        for pw_guess in passwords:
            report.guesses_tried += 1
            report.oracle_checks += 1
            if hash_parts(id_guess, pw_guess) == hip_u:
                report.recovered_id, report.recovered_pw = id_guess, pw_guess
                report.success = True
                report.wall_time = time.perf_counter() - start
                return report
    report.wall_time = time.perf_counter() - start
    return report


def run_attack(t: SessionTranscript, r_u: int, id_dict, pw_dict) -> AttackReport:
    if t.scheme_id == sureshkumar.SCHEME_ID:
        return attack_sureshkumar(t, r_u, id_dict, pw_dict)
    if t.scheme_id == zhang.SCHEME_ID:
        return attack_zhang(t, r_u, pw_dict)
    return attack_enhanced_joint(t, r_u, id_dict, pw_dict)


def verify_report(t: SessionTranscript, r_u: int, report: AttackReport) -> bool:
    """Recompute the captured verifier from the recovered credentials."""
    if not report.success:
        return False
    m1, m2, m3 = t.messages()
    curve = t.params.curve
    K_u = scalar_mult(r_u, t.params.q_s, curve)
    hip = hash_parts(report.recovered_id, report.recovered_pw)
    if t.scheme_id == sureshkumar.SCHEME_ID:
        return hash_parts(hip, encode_point(K_u, curve), encode_timestamp(m1.t_u)) == m1.auth_u
    if t.scheme_id == zhang.SCHEME_ID:
        DK_u = scalar_mult(r_u, m2.r_s, curve)
        expected = hash_parts(
            m2.realm, encode_point(K_u, curve), encode_point(DK_u, curve),
            encode_point(m2.r_s, curve), encode_point(m1.r_u, curve), hip,
        )
        return expected == m3.auth_u
    return xor(hip, hash_parts(encode_point(K_u, curve))) == m1.dp_u
