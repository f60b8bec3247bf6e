"""The three implemented schemes, addressable by name or by wire id."""

from . import enhanced, sureshkumar, zhang
from .common import Credentials, PublicParams, ServerDatabase, ServerKeys

SCHEMES = {
    sureshkumar.SCHEME_ID: sureshkumar,
    zhang.SCHEME_ID: zhang,
    enhanced.SCHEME_ID: enhanced,
}

WIRE_IDS = {sureshkumar.SCHEME_ID: 1, zhang.SCHEME_ID: 2, enhanced.SCHEME_ID: 3}
SCHEME_BY_WIRE_ID = {v: k for k, v in WIRE_IDS.items()}


def scheme_module(scheme_id: str):
    try:
        return SCHEMES[scheme_id]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme_id!r}; choose from {sorted(SCHEMES)}") from None


def new_database(scheme_id: str, window_ms: int | None = None) -> ServerDatabase:
    scheme_module(scheme_id)
    if window_ms is None:
        return ServerDatabase(scheme_id)
    return ServerDatabase(scheme_id, window_ms)


def register_user(scheme_id: str, db: ServerDatabase, creds: Credentials, server: ServerKeys, rng=None):
    """Run the registration phase of any scheme; ``rng`` draws the enhanced ``a_u``."""
    mod = scheme_module(scheme_id)
    if mod is enhanced:
        if rng is None:
            import secrets

            rng = secrets.SystemRandom()
        return enhanced.register(db, creds, server, rng=rng)
    return mod.register(db, creds, server)


def load_database(scheme_id: str, path, window_ms: int | None = None) -> ServerDatabase:
    record_type = scheme_module(scheme_id).Record
    if window_ms is None:
        return ServerDatabase.load(path, record_type)
    return ServerDatabase.load(path, record_type, window_ms)


__all__ = [
    "SCHEMES", "WIRE_IDS", "SCHEME_BY_WIRE_ID", "Credentials", "PublicParams", "ServerDatabase",
    "ServerKeys", "scheme_module", "new_database", "load_database", "register_user",
    "sureshkumar", "zhang", "enhanced",
]
