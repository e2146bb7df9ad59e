"""Shared types: optical-system configuration, uniform grids and sampled kernels.

All lengths are SI meters in double precision. Interface layers convert
from suffixed strings (see :mod:`spectrobench.units`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class SpectroError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(SpectroError, ValueError):
    """An input violates a documented precondition."""


class NumericalContractError(SpectroError):
    """A numerical contract (mass capture, threshold crossing, ...) cannot be met."""


class AxisKind(str, enum.Enum):
    SPACE = "space"
    WAVELENGTH = "wavelength"


@dataclass(frozen=True)
class OpticalSystem:
    """4f relay with a pupil code on P2 and a grating on P3.

    Only the first diffraction order is modeled, so ``grating_order`` is
    pinned to 1.
    """

    focal_length: float
    groove_density: float
    wavelength_min: float
    wavelength_max: float
    grating_order: int = 1

    def __post_init__(self) -> None:
        for name in ("focal_length", "groove_density", "wavelength_min", "wavelength_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive")
        if self.wavelength_min >= self.wavelength_max:
            raise ValidationError("wavelength_min must be below wavelength_max")
        if self.grating_order != 1:
            raise ValidationError("grating_order must be 1")

    @property
    def f_nu0(self) -> float:
        """Dimensionless dispersion scale f*nu0 (rainbow-plane meters per meter of wavelength)."""
        return self.focal_length * self.groove_density

    def dispersion(self, wavelength: float) -> float:
        """Rainbow-plane (P4) position of ``wavelength``: lambda * f * nu0."""
        return wavelength * self.f_nu0

    def check_wavelength(self, wavelength: float) -> None:
        if not (self.wavelength_min <= wavelength <= self.wavelength_max):
            raise ValidationError(
                f"wavelength {wavelength:.6g} m outside "
                f"[{self.wavelength_min:.6g}, {self.wavelength_max:.6g}] m"
            )


def make_system(
    focal_length: float,
    groove_density: float,
    wavelength_min: float,
    wavelength_max: float,
) -> OpticalSystem:
    return OpticalSystem(focal_length, groove_density, wavelength_min, wavelength_max)


def uncertainty_bound(system: OpticalSystem, wavelength: float) -> float:
    """Lower bound on sigma_x * sigma_lambda, in m^2.

    Evaluate at ``system.wavelength_min`` for the wavelength-independent
    (conservative) form.
    """
    if not (math.isfinite(wavelength) and wavelength > 0):
        raise ValidationError("wavelength must be positive")
    return wavelength / (4.0 * math.pi * system.groove_density)


@dataclass(frozen=True)
class Grid1D:
    start: float
    step: float
    count: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValidationError("grid step must be positive")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError("grid count must be an integer >= 2")
        if not math.isfinite(self.start):
            raise ValidationError("grid start must be finite")

    @classmethod
    def symmetric(cls, half_extent: float, count: int) -> "Grid1D":
        """``count`` samples spanning [-half_extent, +half_extent] inclusive."""
        if half_extent <= 0:
            raise ValidationError("half_extent must be positive")
        return cls(-half_extent, 2.0 * half_extent / (count - 1), count)

    @classmethod
    def fft_centered(cls, step: float, count: int) -> "Grid1D":
        """FFT-style grid: sample ``count // 2`` sits exactly at zero."""
        if count % 2:
            raise ValidationError("FFT grids need an even sample count")
        return cls(-(count // 2) * step, step, count)

    def coordinate(self, i: int) -> float:
        return self.start + i * self.step

    @property
    def coords(self) -> np.ndarray:
        return self.start + np.arange(self.count) * self.step

    @property
    def stop(self) -> float:
        return self.coordinate(self.count - 1)

    @property
    def extent(self) -> float:
        return self.step * (self.count - 1)


def trapezoid(values: np.ndarray, grid: Grid1D) -> float:
    return float(np.trapezoid(values, dx=grid.step))


@dataclass(frozen=True, eq=False)
class SampledKernel:
    """Nonnegative blur density on a uniform grid (h_x or h_lambda)."""

    grid: Grid1D
    values: np.ndarray
    axis_kind: AxisKind = AxisKind.SPACE
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.count,):
            raise ValidationError("kernel values must match the grid length")
        if not np.all(np.isfinite(values)):
            raise ValidationError("kernel values must be finite")
        if np.any(values < 0):
            raise ValidationError("kernel values must be nonnegative")
        if not np.any(values > 0):
            raise NumericalContractError("kernel has zero total mass")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "axis_kind", AxisKind(self.axis_kind))

    @property
    def coords(self) -> np.ndarray:
        return self.grid.coords

    def mass(self) -> float:
        return trapezoid(self.values, self.grid)
