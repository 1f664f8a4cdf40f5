"""Exception types shared across the package.

Two broad families matter for callers: ``DataError`` for invalid or
inconsistent inputs, ``NumericalError`` for procedures that start from
valid inputs but fail to produce a usable result.  The command line
front end maps these to exit codes 2 and 3.
"""


class MisealError(Exception):
    """Base class for all errors raised by this package."""


class DataError(MisealError):
    """Invalid or inconsistent input data."""


class NumericalError(MisealError):
    """A numerical procedure failed on otherwise valid inputs."""


class UsageError(MisealError):
    """Command line invocation error (bad flags, missing arguments)."""


class FormatError(DataError):
    """A file does not conform to its declared format."""


class GeometryMismatch(DataError):
    """Two rasters that must share geometry do not."""


class EmptyPatch(DataError):
    """A patch contains no in-mask pixels."""


class OutOfMask(DataError):
    """A point or region leaves the region of interest."""


class DuplicatePoints(DataError):
    """A point pattern contains coincident points."""


class TooFewPoints(DataError):
    """Not enough points for the requested estimate."""


class DegenerateTrend(DataError):
    """A trend surface with no positive in-mask values."""


class SingularityInPatch(DataError):
    """No consistent direction field exists on the requested patch."""


class NonConvergence(NumericalError):
    """An iterative fit did not converge within its iteration budget."""


class Separation(NumericalError):
    """A regression likelihood is unbounded (perfect separation)."""


class DegenerateMarginal(NumericalError):
    """A posterior marginal collapsed to a point; no interval exists."""


class AuxSamplerFailure(NumericalError):
    """The auxiliary pattern sampler returned an infeasible pattern."""


class ScorerFailure(MisealError):
    """A match scorer raised or returned a value outside [0, 1]."""


class ExcludedTrendWarning(UserWarning):
    """A data point sits on an excluded trend pixel; its label is forced to 0."""
