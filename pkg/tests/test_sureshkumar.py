import pytest

import oracle as o
from sipauth.ecc import Point
from sipauth.errors import AuthFailure, DuplicateUser, InvalidPoint, MalformedMessage, ReplayDetected, StaleTimestamp, UnknownUser
from sipauth.schemes import Credentials, ServerKeys, new_database
from sipauth.schemes import sureshkumar as s

ID, PW, K_S, R_U, R_S = b"alice", b"pw1", 7, 3, 5
T0 = 1_700_000_000_000


@pytest.fixture
def setup(toy):
    keys = ServerKeys.from_secret(toy, K_S)
    db = new_database(s.SCHEME_ID)
    creds = Credentials(ID, PW)
    record = s.register(db, creds, keys)
    return keys, db, creds, record


def test_server_public_key(toy):
    keys = ServerKeys.from_secret(toy, K_S)
    assert keys.q_s == Point(*o.mul(7)) == Point(0, 6)


def test_registration_record(setup):
    _, _, _, record = setup
    hid, hip = o.h(ID), o.h(ID, PW)
    assert record.hid_u == hid
    assert record.upw_u == o.xor(o.h(hid, o.sc(K_S)), hip)
    assert record.rp_u == o.xor(ID, PW)
    assert record.key == hid


def test_full_exchange_matches_reference(setup, toy):
    keys, db, creds, _ = setup
    m1, ustate = s.user_start(creds, keys.public(), T0, R_U)
    K = o.mul(R_U * K_S)
    hid, hip = o.h(ID), o.h(ID, PW)
    auth_u = o.h(hip, o.pt(K), o.ts(T0))
    assert m1.encode(toy) == o.pt(o.mul(R_U)) + o.xor(hid, o.h(o.pt(K))) + auth_u + o.ts(T0)

    m2, sstate = s.server_respond(m1, db, keys, T0 + 10, T0 + 10, R_S)
    DK = o.mul(R_U * R_S)
    R_s = o.mul(R_S)
    auth_s = o.h(hip, o.pt(R_s), o.pt(DK), o.ts(T0 + 10))
    assert m2.encode(toy) == o.pt(R_s) + auth_s + o.ts(T0 + 10)

    m3, sk_u = s.user_finish(m2, ustate, T0 + 20)
    sk = o.h(o.pt(K), o.pt(DK), hip)
    assert sk_u == sk
    assert m3.encode(toy) == o.h(auth_u, auth_s, sk)
    assert s.server_confirm(m3, sstate) == sk


def test_messages_round_trip(setup, toy):
    keys, _, creds, _ = setup
    m1, _ = s.user_start(creds, keys.public(), T0, R_U)
    assert s.M1.decode(m1.encode(toy), toy) == m1
    with pytest.raises(MalformedMessage):
        s.M1.decode(m1.encode(toy)[:-1], toy)


def _run(setup, creds=None, t_now=T0):
    keys, db, good, _ = setup
    m1, _ = s.user_start(creds or good, keys.public(), T0, R_U)
    return s.server_respond(m1, db, keys, t_now, t_now, R_S)


def test_wrong_password_rejected(setup):
    with pytest.raises(AuthFailure):
        _run(setup, Credentials(ID, b"pw2"))


def test_unknown_user_rejected(setup):
    with pytest.raises(UnknownUser):
        _run(setup, Credentials(b"mallory", PW))


def test_stale_timestamp(setup):
    _run(setup, t_now=T0 + 5000)
    with pytest.raises(StaleTimestamp):
        _run(setup, t_now=T0 + 5001)


def test_replay_within_window(setup):
    _run(setup)
    with pytest.raises(ReplayDetected):
        _run(setup)


def test_bit_flips_in_m1_rejected(setup, toy):
    keys, db, creds, _ = setup
    m1, _ = s.user_start(creds, keys.public(), T0, R_U)
    data = m1.encode(toy)
    for offset in range(len(data)):
        forged = bytearray(data)
        forged[offset] ^= 0x01
        with pytest.raises((AuthFailure, UnknownUser, InvalidPoint, MalformedMessage, StaleTimestamp)):
            s.server_respond(s.M1.decode(bytes(forged), toy), db, keys, T0, T0, R_S)


def test_forged_auth_s_rejected(setup):
    keys, db, creds, _ = setup
    m1, ustate = s.user_start(creds, keys.public(), T0, R_U)
    m2, _ = s.server_respond(m1, db, keys, T0, T0, R_S)
    forged = s.M2(m2.r_s, bytes([m2.auth_s[0] ^ 1]) + m2.auth_s[1:], m2.t_s)
    with pytest.raises(AuthFailure):
        s.user_finish(forged, ustate, T0)
    with pytest.raises(StaleTimestamp):
        s.user_finish(m2, ustate, T0 + 5001)


def test_forged_conf_rejected(setup):
    keys, db, creds, _ = setup
    m1, ustate = s.user_start(creds, keys.public(), T0, R_U)
    m2, sstate = s.server_respond(m1, db, keys, T0, T0, R_S)
    m3, _ = s.user_finish(m2, ustate, T0)
    with pytest.raises(AuthFailure):
        s.server_confirm(s.M3(bytes(32)), sstate)


def test_duplicate_registration(setup):
    keys, db, creds, _ = setup
    with pytest.raises(DuplicateUser):
        s.register(db, creds, keys)


def test_ephemeral_range(setup, toy):
    keys, _, creds, _ = setup
    for bad in (0, toy.n):
        with pytest.raises(ValueError):
            s.user_start(creds, keys.public(), T0, bad)


def test_database_round_trip(setup, tmp_path):
    _, db, _, record = setup
    path = tmp_path / "db"
    db.save(path)
    loaded = new_database(s.SCHEME_ID).load(path, s.Record)
    assert loaded.lookup(record.key) == record
