"""Space-spectrum resolution analysis for coded-aperture programmable spectral cameras."""

from spectrobench.core import (
    Grid1D,
    NumericalContractError,
    OpticalSystem,
    SampledKernel,
    SpectroError,
    ValidationError,
    make_system,
    uncertainty_bound,
)

__all__ = [
    "Grid1D",
    "NumericalContractError",
    "OpticalSystem",
    "SampledKernel",
    "SpectroError",
    "ValidationError",
    "make_system",
    "uncertainty_bound",
]

__version__ = "0.1.0"
