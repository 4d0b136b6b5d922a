"""Exception hierarchy and process exit codes."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class LabelCycleError(Exception):
    """Base error for the toolkit."""


class DataError(LabelCycleError):
    """Bad input data: malformed records, unknown ids, invalid values."""


class UsageError(LabelCycleError):
    """Invalid invocation or configuration."""


class TrainingDivergedError(LabelCycleError):
    """Raised when a training loss becomes non-finite."""

    def __init__(self, message, epoch=None, loss=None):
        super().__init__(message)
        self.epoch = epoch
        self.loss = loss
