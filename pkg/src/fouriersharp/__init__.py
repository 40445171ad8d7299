"""Fourier-spectrum no-reference sharpness scoring for image stacks."""

from .errors import AlignmentError, DegenerateInputError, ImageFormatError, NoThresholdError
from .pipeline import RunConfig, assess_arrays, assess_paths
from .stats import StackAssessment, classify_stack

__all__ = [
    "AlignmentError",
    "DegenerateInputError",
    "ImageFormatError",
    "NoThresholdError",
    "RunConfig",
    "StackAssessment",
    "assess_arrays",
    "assess_paths",
    "classify_stack",
]
__version__ = "0.1.0"
