"""Exception types shared across the package."""


class SubgenError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(SubgenError):
    """Rows of an SFM (or vectors of a linear system) have unequal lengths."""


class EmptyRowOrColumn(SubgenError):
    """Input matrix is not a reduced SFM: some receiver wants nothing or
    some packet is wanted by nobody."""


class SizeLimitExceeded(SubgenError):
    """Instance is larger than the exact solver is willing to handle."""


class UnknownPacket(SubgenError, KeyError):
    """Packet id does not occur in the solution/SFM at hand."""


class EmptySetProduced(SubgenError):
    """Diversity reduction emptied a coding set, i.e. the input solution
    contained a fully redundant set."""


class InvalidG(SubgenError):
    """Sub-generation size outside the valid range for the given input."""


class LengthMismatch(SubgenError):
    """Coefficient vector and packet list (or payload lengths) disagree."""


class GFDivisionByZero(SubgenError, ZeroDivisionError):
    """Inverse or division by the zero field element."""


class InconsistentSystem(SubgenError):
    """A reduced row has zero coefficients but a nonzero payload; only
    possible if payloads were corrupted."""


class NonReducedDiversity(SubgenError):
    """Transmission over sub-generations of size >= 2 requires packet
    diversity reduced to one beforehand."""


class IncompleteLog(SubgenError):
    """Metrics requested from a transmission log that never completed."""


class ConfigError(SubgenError):
    """Invalid experiment or strategy configuration."""
