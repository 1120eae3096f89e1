"""Diffusion-prior posterior sampling for exponential-family observations."""

from .errors import ConfigError, DomainError, ExpDiffError, NumericalError, SamplingError, TrainingError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "ExpDiffError",
    "NumericalError",
    "SamplingError",
    "TrainingError",
    "__version__",
]
