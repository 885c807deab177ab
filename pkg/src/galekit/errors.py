"""Exception types shared across galekit modules."""


class GalekitError(Exception):
    """Base class for all galekit errors."""


# numerics

class NegativeBase(GalekitError):
    """Non-integer power of an interval reaching below zero."""


class ZeroToNegative(GalekitError):
    """Negative power of an interval containing zero."""


class DivergentSeries(GalekitError):
    """Geometric bound requested with ratio >= 1."""


# measures

class DepthExceeded(GalekitError):
    """Query beyond the depth a finite table supports."""


class NonPositiveNode(GalekitError):
    """Stored measure node that is not certainly positive."""


class NoCertificate(GalekitError):
    """No balance certificate candidate exists at the probed depth."""


# gales

class NegativePayoff(GalekitError):
    """Payoff value below zero where nonnegativity is required."""


class MonotonicityViolation(GalekitError):
    """Staged oracle decreased between stages."""


# construct

class ZeroMeasureNode(GalekitError):
    """Evaluation at a node whose measure is not certainly positive."""


class UnboundedRoot(GalekitError):
    """Root sum not demonstrably finite (truncated set without a tail bound)."""


class NotWellBalanced(GalekitError):
    """Measure failed its balance certificate check."""


class RootUnbounded(GalekitError):
    """Source payoff at the root cannot be normalized below one."""


# io / cli

class ParseError(GalekitError):
    """Malformed input file.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DepthCap(GalekitError):
    """Requested depth exceeds the configured hard cap."""


class UnknownStrategy(GalekitError):
    """Strategy name not among the built-in closed forms."""
