"""Exception types shared across the package."""


class WaveRomError(Exception):
    """Base class for errors raised by this package."""


class FieldFormatError(WaveRomError, ValueError):
    """A field CSV could not be parsed; the message names the row/column."""


class UndefinedMetricError(WaveRomError, ValueError):
    """A metric is undefined for the given inputs (e.g. zero total variance)."""


class ConditioningError(WaveRomError, ValueError):
    """A linear solve is too ill-conditioned to trust."""


class TrainingDivergedError(WaveRomError, RuntimeError):
    """An iterative fit produced a non-finite loss.

    Attributes
    ----------
    epoch : int
        Epoch index at which the loss became non-finite.
    """

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class PipelineStageError(WaveRomError, RuntimeError):
    """A pipeline stage failed; carries the stage name and underlying cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
