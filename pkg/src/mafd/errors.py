"""Exception and warning classes raised by mafd."""


class MafdError(Exception):
    """Base class for all library errors."""


class NonHermitianInput(MafdError, ValueError):
    pass


class RankOutOfRange(MafdError, ValueError):
    pass


class SpectralRadiusTooLarge(MafdError, ValueError):
    pass


class ShapeMismatch(MafdError, ValueError):
    pass


class PointOutsideSearchDisk(MafdError, ValueError):
    pass


class PoleHit(MafdError, ZeroDivisionError):
    pass


class ZeroHit(MafdError, ZeroDivisionError):
    pass


class ZeroPointForbidden(MafdError, ValueError):
    pass


class PreconditionViolated(MafdError, ValueError):
    """Deflation was asked to divide a function that does not vanish at the point."""


class UnobservablePair(MafdError, ValueError):
    pass


class ZeroFunction(MafdError):
    """The remainder carries no selectable energy; a greedy run ends here."""


class NotRealSpectrum(MafdError, ValueError):
    pass


class InvalidParams(MafdError, ValueError):
    pass


class ParseError(MafdError, ValueError):
    """Malformed signal/result document.

    ``where`` names the offending line or field when known.
    """

    def __init__(self, message, where=None):
        self.where = where
        if where is not None:
            message = f"{message} (at {where})"
        super().__init__(message)


class SchemaVersionMismatch(ParseError):
    pass


class SingularGramian(UserWarning):
    """Observability Gramian is numerically singular (non-fatal)."""


class RemainderLeak(UserWarning):
    """Synthetic division left a remainder that was dropped into the ledger."""


class InvariantViolation(MafdError, ArithmeticError):
    """A numerical identity that must hold along a run failed its tolerance."""
