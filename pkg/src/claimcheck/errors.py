"""Exception types shared across the package."""


class ClaimCheckError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatchError(ClaimCheckError):
    """Tensor dimensions do not agree; message names both shapes."""


class ConfigurationError(ClaimCheckError):
    """Invalid configuration value or flag combination."""


class NonFiniteError(ClaimCheckError):
    """A NaN or Inf crossed a layer boundary; message names the offender."""


class DatasetValidationError(ClaimCheckError):
    """A dataset record violates the schema; message names record and field."""


class StoreFormatError(ClaimCheckError):
    """Embedding store or checkpoint bytes do not match the declared format."""


class TrainingDivergedError(ClaimCheckError):
    """Loss became non-finite during training; carries step diagnostics."""
