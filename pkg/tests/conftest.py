import random

import pytest

from sipauth.ecc import std256, toy17
from sipauth.prims import ManualClock
from sipauth.schemes import Credentials, ServerKeys, new_database, register_user


@pytest.fixture(scope="session")
def toy():
    return toy17()


@pytest.fixture(scope="session")
def p256():
    return std256()


@pytest.fixture
def rng():
    return random.Random(20240917)


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def server_keys(toy):
    return ServerKeys.from_secret(toy, 7)


@pytest.fixture
def alice():
    return Credentials("alice", "hunter2")


@pytest.fixture
def registered(server_keys, alice, rng):
    """One database per scheme with alice registered."""
    dbs = {}
    for scheme_id in ("sureshkumar", "zhang", "enhanced"):
        db = new_database(scheme_id)
        register_user(scheme_id, db, alice, server_keys, rng)
        dbs[scheme_id] = db
    return dbs


@pytest.fixture
def capture(server_keys, clock):
    """Run honest sessions and return ``(outcome, transcript)`` for a scheme."""
    from sipauth.netharness import record_transcripts, run_session

    def _capture(scheme_id, creds, db, seed=1):
        outcome = run_session(scheme_id, creds, db, server_keys, clock=clock, rng=random.Random(seed))
        assert outcome.agreed, outcome.status
        clock.advance(1)
        return outcome, record_transcripts(outcome, session_id=seed)

    return _capture
