"""Exception types raised across edgebench.

Class names double as the error identifiers the CLI prints on failure.
"""


class EdgebenchError(Exception):
    """Base class for every error raised by this package."""

    @property
    def name(self) -> str:
        return type(self).__name__


# raster I/O
class MalformedHeader(EdgebenchError, ValueError):
    pass


class TruncatedData(EdgebenchError, ValueError):
    pass


class UnsupportedMaxval(EdgebenchError, ValueError):
    pass


class IoFailure(EdgebenchError, OSError):
    pass


class MissingFile(EdgebenchError, FileNotFoundError):
    pass


class DuplicateLabel(EdgebenchError, ValueError):
    pass


class DimensionMismatch(EdgebenchError, ValueError):
    pass


# filtering / geometry
class KernelLargerThanImage(EdgebenchError, ValueError):
    pass


class NonPositiveSigma(EdgebenchError, ValueError):
    pass


class GeometryOutOfBounds(EdgebenchError, ValueError):
    pass


class ImageTooSmall(EdgebenchError, ValueError):
    pass


# detector configuration
class ThresholdOutOfRange(EdgebenchError, ValueError):
    pass


class InvalidThresholdPair(EdgebenchError, ValueError):
    pass


class NegativeThreshold(EdgebenchError, ValueError):
    pass


# sweeps
class EmptyGrid(EdgebenchError, ValueError):
    pass


class UnsortedGrid(EdgebenchError, ValueError):
    pass


class UnfilledDensities(EdgebenchError, ValueError):
    pass


class DegenerateInput(EdgebenchError, ValueError):
    pass


# band analysis / benchmarking
class EmptyStack(EdgebenchError, ValueError):
    pass


class DensityOutOfRange(EdgebenchError, ValueError):
    pass


class PreconditionViolation(EdgebenchError, ValueError):
    pass
