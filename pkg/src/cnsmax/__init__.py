"""Spectral controllability and stabilization toolkit for the 1D linearized
compressible Navier-Stokes system with Maxwell stress relaxation on (0, 2*pi)
with periodic boundary data."""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from .errors import (
    CnsmaxError,
    DegenerateWindow,
    GridTooCoarse,
    HypothesisViolated,
    IllConditioned,
    MultiplicityDetected,
    NumericalFailure,
    ObservationVanished,
    OmegaTooSmall,
    RankDeficient,
    StepTooLarge,
    ValidationError,
)
from .model import DerivedConstants, FluidParams, derive_constants, validate

__all__ = [
    "__version__",
    "kernel_backend",
    "FluidParams",
    "DerivedConstants",
    "derive_constants",
    "validate",
    "CnsmaxError",
    "ValidationError",
    "NumericalFailure",
    "MultiplicityDetected",
    "RankDeficient",
    "ObservationVanished",
    "IllConditioned",
    "OmegaTooSmall",
    "StepTooLarge",
    "HypothesisViolated",
    "GridTooCoarse",
    "DegenerateWindow",
]
