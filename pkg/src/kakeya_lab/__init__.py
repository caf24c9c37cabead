"""Numerical laboratory for tube packings and radial Fourier multipliers."""
from ._kernels import BACKEND
from .errors import (
    AccuracyFailure,
    BandExceeded,
    ConstraintViolation,
    ConstructionFailed,
    DomainTooSmall,
    InvalidArgument,
    ResolutionTooCoarse,
    SingularityError,
)
from .report import BoundReport

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundReport",
    "AccuracyFailure",
    "BandExceeded",
    "ConstraintViolation",
    "ConstructionFailed",
    "DomainTooSmall",
    "InvalidArgument",
    "ResolutionTooCoarse",
    "SingularityError",
]
