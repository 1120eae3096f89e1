"""Exception hierarchy shared across the package."""


class ExpDiffError(Exception):
    """Base class for all package errors."""


class DomainError(ExpDiffError, ValueError):
    """A value lies outside the domain of a family, link or schedule.

    Raised as a recoverable error so callers (training guards, samplers)
    can catch it and react instead of aborting.
    """


class ConfigError(ExpDiffError, ValueError):
    """Invalid configuration, shape mismatch or malformed spec string."""


class NumericalError(ExpDiffError, ArithmeticError):
    """A numerical routine failed (non-finite values, failed factorization)."""


class TrainingError(NumericalError):
    """Training diverged; carries the path of the last good checkpoint."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class SamplingError(NumericalError):
    """A sampler produced a non-finite state."""

    def __init__(self, message, t=None, step=None):
        super().__init__(message)
        self.t = t
        self.step = step
