"""Exception types shared across the package."""


class DegenerateInputError(ValueError):
    """Statistic is undefined for the given data (zero variance, all-zero vector, ...)."""


class NoThresholdError(DegenerateInputError):
    """No crop size has an all-non-negative kurtosis row."""


class AlignmentError(ValueError):
    """Score and label tables do not cover the same source ids."""


class ImageFormatError(ValueError):
    """File exists but could not be decoded as a supported image."""
