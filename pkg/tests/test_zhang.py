import pytest

import oracle as o
from sipauth.errors import AuthFailure, InvalidPoint, MalformedMessage, UnknownUser
from sipauth.schemes import Credentials, ServerKeys, new_database
from sipauth.schemes import zhang as z

ID, PW, K_S, R_U, R_S = b"alice", b"pw1", 7, 3, 5
REALM = b"hospital.example"


@pytest.fixture
def setup(toy):
    keys = ServerKeys.from_secret(toy, K_S)
    db = new_database(z.SCHEME_ID)
    creds = Credentials(ID, PW)
    record = z.register(db, creds, keys)
    return keys, db, creds, record


def test_registration_record(setup):
    _, _, _, record = setup
    assert record.id_u == ID
    assert record.vpw_u == o.xor(o.h(ID, o.sc(K_S)), o.h(ID, PW))


def test_full_exchange_matches_reference(setup, toy):
    keys, db, creds, _ = setup
    R_u, R_s = o.mul(R_U), o.mul(R_S)
    K, DK = o.mul(R_U * K_S), o.mul(R_U * R_S)

    m1, ustate = z.user_start(creds, keys.public(), R_U)
    assert m1.encode(toy) == o.blob(o.xor(ID, o.h(o.pt(R_u), o.pt(K)))) + o.pt(R_u)

    m2, sstate = z.server_challenge(m1, keys, REALM, R_S)
    auth_s = o.h(o.pt(K), o.pt(DK), o.pt(R_s), o.pt(R_u))
    assert m2.encode(toy) == o.blob(REALM) + o.pt(R_s) + auth_s

    m3, sk_u = z.user_finish(m2, ustate)
    auth_u = o.h(REALM, o.pt(K), o.pt(DK), o.pt(R_s), o.pt(R_u), o.h(ID, PW))
    assert m3.encode(toy) == o.blob(REALM) + auth_u
    sk = o.h(ID, o.pt(DK), o.pt(K), o.pt(R_u), o.pt(R_s))
    assert sk_u == sk
    assert z.server_verify(m3, sstate, db, keys) == sk


def test_identity_recovery_strips_padding():
    assert z.recover_identity(o.xor(b"bob", b"\x55" * 32), b"\x55" * 32) == b"bob"


def test_wrong_password_rejected_only_at_m3(setup):
    keys, db, _, _ = setup
    m1, ustate = z.user_start(Credentials(ID, b"pw2"), keys.public(), R_U)
    m2, sstate = z.server_challenge(m1, keys, REALM, R_S)
    m3, _ = z.user_finish(m2, ustate)
    with pytest.raises(AuthFailure):
        z.server_verify(m3, sstate, db, keys)


def test_unknown_user_rejected_at_m3(setup):
    keys, db, _, _ = setup
    m1, ustate = z.user_start(Credentials(b"mallory", PW), keys.public(), R_U)
    m2, sstate = z.server_challenge(m1, keys, REALM, R_S)
    m3, _ = z.user_finish(m2, ustate)
    with pytest.raises(UnknownUser):
        z.server_verify(m3, sstate, db, keys)


def test_realm_mismatch_rejected(setup):
    keys, db, creds, _ = setup
    m1, ustate = z.user_start(creds, keys.public(), R_U)
    m2, sstate = z.server_challenge(m1, keys, REALM, R_S)
    m3, _ = z.user_finish(m2, ustate)
    with pytest.raises(AuthFailure):
        z.server_verify(z.M3(b"evil.example", m3.auth_u), sstate, db, keys)


def test_bit_flips_in_m2_rejected(setup, toy):
    keys, _, creds, _ = setup
    m1, ustate = z.user_start(creds, keys.public(), R_U)
    m2, _ = z.server_challenge(m1, keys, REALM, R_S)
    data = m2.encode(toy)
    for offset in range(4 + len(REALM), len(data)):
        forged = bytearray(data)
        forged[offset] ^= 0x01
        with pytest.raises((AuthFailure, InvalidPoint, MalformedMessage)):
            z.user_finish(z.M2.decode(bytes(forged), toy), ustate)


def test_bit_flips_in_m3_rejected(setup, toy):
    keys, db, creds, _ = setup
    m1, ustate = z.user_start(creds, keys.public(), R_U)
    m2, sstate = z.server_challenge(m1, keys, REALM, R_S)
    m3, _ = z.user_finish(m2, ustate)
    data = m3.encode(toy)
    for offset in range(len(data)):
        forged = bytearray(data)
        forged[offset] ^= 0x80
        with pytest.raises((AuthFailure, MalformedMessage)):
            z.server_verify(z.M3.decode(bytes(forged), toy), sstate, db, keys)


def test_server_answers_m1_without_authentication(setup):
    # any well-formed m1 gets a challenge; authentication waits for m3
    keys, _, _, _ = setup
    m1, _ = z.user_start(Credentials(b"nobody", b"x"), keys.public(), R_U)
    m2, _ = z.server_challenge(m1, keys, REALM, R_S)
    assert m2.realm == REALM


def test_messages_round_trip(setup, toy):
    keys, _, creds, _ = setup
    m1, _ = z.user_start(creds, keys.public(), R_U)
    assert z.M1.decode(m1.encode(toy), toy) == m1
