"""Exception types shared across the package.

Everything derives from :class:`HeatmapError` so callers (notably the CLI)
can map any domain failure to a nonzero exit code with one handler.
"""


class HeatmapError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(HeatmapError, ValueError):
    """Grid or stack dimensions do not match what the operation requires."""


class DomainError(HeatmapError, ValueError):
    """A scalar argument lies outside the operation's valid domain."""


class OutOfFrameError(HeatmapError, ValueError):
    """A landmark coordinate falls outside the declared frame."""


class DegenerateNormalizationError(HeatmapError, ValueError):
    """The normalization factor for a metric is zero or negative."""


class UndefinedMetricError(HeatmapError, ValueError):
    """A metric was requested on an empty collection."""


class SchemaError(HeatmapError, ValueError):
    """A boundary schema or annotation file is malformed."""


class DivergenceError(HeatmapError, RuntimeError):
    """Training produced a non-finite loss.

    Carries the epoch at which divergence was detected and the loss trace
    accumulated up to that point.
    """

    def __init__(self, message: str, epoch: int, trace: list):
        super().__init__(message)
        self.epoch = epoch
        self.trace = trace
