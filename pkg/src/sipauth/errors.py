"""Exception taxonomy shared by the curve code, the schemes and the transport.

Every protocol rejection derives from :class:`ProtocolError` and carries a
one-byte ``code`` which is what goes on the wire in an error frame.
"""


class SipAuthError(Exception):
    """Base class for everything raised by this package."""


# -- curve arithmetic ---------------------------------------------------------

class CurveError(SipAuthError, ValueError):
    pass


class GroupTooLarge(CurveError):
    pass


class NoSolution(CurveError):
    pass


# -- protocol rejections ------------------------------------------------------

class ProtocolError(SipAuthError):
    code = 0x00


class MalformedMessage(ProtocolError):
    code = 0x01


class InvalidPoint(ProtocolError, ValueError):
    code = 0x02


class PointNotOnCurve(InvalidPoint):
    pass


class StaleTimestamp(ProtocolError):
    code = 0x03


class ReplayDetected(ProtocolError):
    code = 0x04


class UnknownUser(ProtocolError):
    code = 0x05


class AuthFailure(ProtocolError):
    code = 0x06


class DuplicateUser(ProtocolError):
    code = 0x07


class TransportClosed(ProtocolError):
    code = 0x08


ERROR_CODES = {
    cls.code: cls
    for cls in (
        MalformedMessage,
        InvalidPoint,
        StaleTimestamp,
        ReplayDetected,
        UnknownUser,
        AuthFailure,
        DuplicateUser,
        TransportClosed,
    )
}


def error_from_code(code: int) -> ProtocolError:
    return ERROR_CODES.get(code, ProtocolError)(f"peer reported error 0x{code:02x}")


# -- adversary ----------------------------------------------------------------

class NoMatch(SipAuthError, LookupError):
    pass


class NoIdentityOracle(SipAuthError):
    """The scheme exposes no transcript predicate over the identity alone."""
