import random
import threading

import pytest

from sipauth import netharness as nh
from sipauth.errors import AuthFailure, MalformedMessage, ProtocolError, TransportClosed, UnknownUser
from sipauth.netharness import ChannelScript, Delay, Deliver, Drop, Frame, Replay, Tamper, run_session
from sipauth.prims import ManualClock
from sipauth.schemes import Credentials, ServerKeys, new_database, register_user

SCHEMES = ("sureshkumar", "zhang", "enhanced")
MASKS = (0x01, 0x80, 0xFF)


def test_frame_round_trip():
    f = Frame.of("zhang", 2, b"payload")
    data = f.encode()
    assert data[:6] == bytes([2, 2, 0, 0, 0, 7])
    assert Frame.decode(data) == f
    assert f.tampered(0, 0xFF).payload == bytes([ord("p") ^ 0xFF]) + b"ayload"


@pytest.mark.parametrize("data", [b"\x01\x01\x00", b"\x09\x01\x00\x00\x00\x00", b"\x01\x05\x00\x00\x00\x00",
                                  b"\x01\x01\x00\x00\x00\x02x"])
def test_frame_rejects_bad_headers(data):
    with pytest.raises(MalformedMessage):
        Frame.decode(data)


def test_frame_tamper_bounds():
    f = Frame.of("zhang", 1, b"ab")
    with pytest.raises(ValueError):
        f.tampered(2, 1)
    with pytest.raises(ValueError):
        f.tampered(0, 0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_honest_sessions_agree(scheme, registered, server_keys, alice, clock, rng):
    for _ in range(20):
        outcome = run_session(scheme, alice, registered[scheme], server_keys, clock=clock, rng=rng)
        assert outcome.agreed and outcome.status == "keys-agree"
        assert outcome.user_key == outcome.server_key and len(outcome.user_key) == 32
        assert [f.msg_index for _, f in outcome.frames] == [1, 2, 3]
        clock.advance(1)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_every_single_byte_tamper_is_rejected(scheme, registered, server_keys, alice, clock):
    db = registered[scheme]
    honest = run_session(scheme, alice, db, server_keys, clock=clock, rng=random.Random(0))
    sizes = [len(f.payload) for _, f in honest.frames]
    clock.advance(1)
    cases = 0
    for msg in range(3):
        for offset in range(sizes[msg]):
            for mask in MASKS:
                script = ChannelScript([Deliver()] * msg + [Tamper(offset, mask)])
                outcome = run_session(scheme, alice, db, server_keys, script, clock, random.Random(cases))
                assert not outcome.agreed, (msg + 1, offset, mask)
                assert outcome.error is not None
                clock.advance(1)
                cases += 1
    assert cases == 3 * sum(sizes)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_dropped_frame(scheme, registered, server_keys, alice, clock, rng):
    outcome = run_session(scheme, alice, registered[scheme], server_keys, ChannelScript([Deliver(), Drop()]),
                          clock, rng)
    assert not outcome.agreed and outcome.error == "TransportClosed"


@pytest.mark.parametrize("scheme", ("sureshkumar", "enhanced"))
def test_delayed_request_is_stale(scheme, registered, server_keys, alice, clock, rng):
    ok = run_session(scheme, alice, registered[scheme], server_keys, ChannelScript([Delay(5000)]), clock, rng)
    assert ok.agreed
    late = run_session(scheme, alice, registered[scheme], server_keys, ChannelScript([Delay(5001)]), clock, rng)
    assert late.error == "StaleTimestamp" and late.rejected_by == "server"


def test_zhang_has_no_freshness(registered, server_keys, alice, clock, rng):
    outcome = run_session("zhang", alice, registered["zhang"], server_keys, ChannelScript([Delay(60_000)]), clock, rng)
    assert outcome.agreed


def test_enhanced_replay_then_stale(registered, server_keys, alice, clock, capture):
    _, t = capture("enhanced", alice, registered["enhanced"])
    again = nh.replay_transcript(t, registered["enhanced"], server_keys, clock, random.Random(9))
    assert (again.accepted, again.error, again.stage) == (False, "ReplayDetected", "m1")
    clock.advance(5001)
    late = nh.replay_transcript(t, registered["enhanced"], server_keys, clock, random.Random(9))
    assert (late.accepted, late.error) == (False, "StaleTimestamp")


def test_replayed_m1_inside_a_live_session(registered, server_keys, alice, clock):
    db = registered["sureshkumar"]
    first = run_session("sureshkumar", alice, db, server_keys, clock=clock, rng=random.Random(4))
    m1 = first.frames[0][1]
    outcome = run_session("sureshkumar", alice, db, server_keys, ChannelScript([Replay(m1)]), clock, random.Random(5))
    assert outcome.error == "ReplayDetected"


def test_zhang_full_replay_with_repeated_server_nonce(registered, server_keys, alice, clock):
    db = registered["zhang"]
    original = run_session("zhang", alice, db, server_keys, clock=clock, rng=random.Random(1),
                           server_rng=random.Random(42))
    t = nh.record_transcripts(original)
    replay = nh.replay_transcript(t, db, server_keys, clock, random.Random(42))
    assert replay.accepted
    assert replay.server_key == original.server_key


def test_zhang_full_replay_with_fresh_server_nonce(registered, server_keys, alice, clock, toy):
    db = registered["zhang"]
    original = run_session("zhang", alice, db, server_keys, clock=clock, rng=random.Random(1),
                           server_rng=random.Random(42))
    t = nh.record_transcripts(original)
    r_s = random.Random(42).randrange(1, toy.n)
    seed = next(s for s in range(100) if random.Random(s).randrange(1, toy.n) != r_s)
    replay = nh.replay_transcript(t, db, server_keys, clock, random.Random(seed))
    # m1 is still answered; only m3 fails
    assert (replay.accepted, replay.stage, replay.error) == (False, "m3", "AuthFailure")


def test_transcript_log_round_trip(tmp_path, registered, alice, capture):
    path = tmp_path / "log"
    assert nh.next_session_id(path) == 1
    _, t1 = capture("sureshkumar", alice, registered["sureshkumar"], seed=1)
    _, t2 = capture("enhanced", alice, registered["enhanced"], seed=2)
    nh.write_transcript_log(path, [t1])
    nh.write_transcript_log(path, [t2])
    assert nh.next_session_id(path) == 3
    loaded = nh.read_transcript_log(path)
    assert [(t.scheme_id, t.m1, t.m2, t.m3) for t in loaded] == [(t.scheme_id, t.m1, t.m2, t.m3) for t in (t1, t2)]
    assert loaded[0].params == t1.params


def test_alert_sealing():
    key = bytes(range(32))
    sealed = nh.seal_alert(key, b"vitals critical")
    assert nh.open_alert(key, sealed) == b"vitals critical"
    assert b"vitals" not in sealed
    forged = bytearray(sealed)
    forged[20] ^= 1
    with pytest.raises(AuthFailure):
        nh.open_alert(key, bytes(forged))
    with pytest.raises(AuthFailure):
        nh.open_alert(bytes(32), sealed)
    assert len(nh.fingerprint(key)) == 16


# -- sockets ----------------------------------------------------------------------


@pytest.fixture
def tcp_server(registered, server_keys):
    servers = []

    def _start(scheme, **options):
        srv = nh.serve(("127.0.0.1", 0), registered[scheme], scheme, server_keys, **options)
        servers.append(srv)
        return srv

    yield _start
    for srv in servers:
        srv.stop()


@pytest.mark.parametrize("scheme", SCHEMES)
def test_socket_round_trip(scheme, tcp_server, server_keys, alice):
    srv = tcp_server(scheme)
    result = nh.connect(srv.address, alice, scheme, server_keys.public(), alert=b"bed 4 alarm")
    assert result.ack == b"ACK bed 4 alarm"
    assert srv.established == [(result.fingerprint, b"bed 4 alarm")]


@pytest.mark.parametrize("scheme", SCHEMES)
def test_wrong_password_gets_error_frame(scheme, tcp_server, server_keys, alice):
    srv = tcp_server(scheme)
    with pytest.raises((AuthFailure, UnknownUser)):
        nh.connect(srv.address, Credentials(alice.id_u, b"wrong"), scheme, server_keys.public())
    assert srv.established == []
    assert len(srv.failures) == 1


def test_concurrent_clients(p256, rng):
    # STD-256: on TOY-17 two clients in the same millisecond can legitimately
    # draw the same R_u and trip the replay cache
    scheme = "enhanced"
    server_keys = ServerKeys.generate(p256, rng)
    db = new_database(scheme)
    users = [Credentials(f"nurse{i}", f"pw{i}") for i in range(8)]
    for creds in users:
        register_user(scheme, db, creds, server_keys, rng)
    srv = nh.serve(("127.0.0.1", 0), db, scheme, server_keys)
    results, errors = {}, []

    def worker(creds):
        try:
            results[creds.id_u] = nh.connect(srv.address, creds, scheme, server_keys.public(),
                                             alert=b"from " + creds.id_u)
        except (ProtocolError, OSError) as exc:
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(c,)) for c in users]
    try:
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        srv.stop()
    assert errors == []
    assert len(results) == len(users)
    assert sorted(msg for _, msg in srv.established) == sorted(b"from " + c.id_u for c in users)
    assert len({r.session_key for r in results.values()}) == len(users)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_socket_and_memory_frames_identical(scheme, tcp_server, server_keys, alice, toy):
    start = 1_700_000_123_000
    srv = tcp_server(scheme, clock=ManualClock(start), rng=random.Random(77))
    result = nh.connect(srv.address, alice, scheme, server_keys.public(), clock=ManualClock(start),
                        rng=random.Random(33))
    memory_db = new_database(scheme)
    for record in srv.db.records():
        memory_db.add(record)
    outcome = run_session(scheme, alice, memory_db, server_keys, clock=ManualClock(start),
                          rng=random.Random(33), server_rng=random.Random(77))
    socket_bytes = [f.encode() for _, f in result.frames]
    memory_bytes = [f.encode() for _, f in outcome.frames]
    assert socket_bytes == memory_bytes
    assert [f.encode() for _, f in srv.session_frames[0]] == memory_bytes
    assert outcome.user_key == result.session_key


def test_peer_error_codes_map_to_exceptions():
    import socket

    a, b = socket.socketpair()
    with a, b:
        nh.send_error(a, UnknownUser("x"))
        with pytest.raises(UnknownUser):
            nh.read_frame(b)
        a.close()
        with pytest.raises(TransportClosed):
            nh.read_frame(b)


# -- at-rest storage ----------------------------------------------------------------


def test_enhanced_database_file_holds_no_identity(tmp_path, server_keys, rng):
    from sipauth.prims import hash_parts

    creds = Credentials("dr.who@hospital.example", "tardis-1963")
    db = new_database("enhanced")
    register_user("enhanced", db, creds, server_keys, rng)
    path = tmp_path / "enhanced.db"
    db.save(path)
    raw = path.read_bytes()
    for needle in (creds.id_u, creds.pw_u, hash_parts(creds.id_u)):
        assert needle not in raw
        assert needle.hex().encode() not in raw

    # contrast: the published scheme stores h(ID_u) as its index
    plain = new_database("sureshkumar")
    register_user("sureshkumar", plain, creds, server_keys)
    assert hash_parts(creds.id_u).hex() in plain.dumps()
