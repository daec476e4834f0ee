"""Exception types raised across the package.

Each class names the failing condition so the CLI can report the stage
that broke without parsing messages.
"""


class VO2Error(Exception):
    """Base class for all package errors."""


class InvalidLevel(VO2Error, ValueError):
    pass


class NonFiniteState(VO2Error, ArithmeticError):
    pass


class WindowTooShort(VO2Error, ValueError):
    pass


class Ambiguous(VO2Error):
    """Trace does not match any of the three response patterns."""


class EmptyRun(VO2Error, ValueError):
    pass


class NoOscillatingBand(VO2Error):
    pass


class ShapeMismatch(VO2Error, ValueError):
    pass


class DivergedLoss(VO2Error, ArithmeticError):
    pass


class EmptyData(VO2Error, ValueError):
    pass


class BadMagic(VO2Error, ValueError):
    pass


class TruncatedFile(VO2Error, ValueError):
    pass


class DimensionMismatch(VO2Error, ValueError):
    pass


class LabelOutOfRange(VO2Error, ValueError):
    pass
