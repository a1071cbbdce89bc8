"""Exception types raised across the package."""


class AdvTuneError(Exception):
    """Base class for package errors."""


class RetryExhausted(AdvTuneError):
    """No layout candidate was accepted within the retry budget."""


class DegenerateTable(AdvTuneError):
    """A probability table has no positive entry and cannot be normalized."""


class DimensionMismatch(AdvTuneError, ValueError):
    pass


class LengthMismatch(AdvTuneError, ValueError):
    pass


class NonFiniteLoss(AdvTuneError):
    """Training loss became NaN or infinite (learning rate too high?)."""


class EmptyDataset(AdvTuneError, ValueError):
    pass


class BinningMismatch(AdvTuneError, ValueError):
    pass


class ConfigError(AdvTuneError, ValueError):
    pass
