"""Closed-form spectral and spatial blur kernels of a pupil code.

h_lambda(l) = |a(-l f nu0)|^2 and h_x(x) = |A(-x / (lambda f))|^2, both
centered at zero. The absolute rainbow-plane offset lambda f nu0 is handled
in :mod:`spectrobench.spectral_filtering`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from spectrobench.aperture import ApertureProfile, Gaussian, Sampled, Slit
from spectrobench.core import (
    AxisKind,
    Grid1D,
    NumericalContractError,
    OpticalSystem,
    SampledKernel,
    ValidationError,
    trapezoid,
    uncertainty_bound,
)

DEFAULT_WINDOW = 1e-3
MASS_CAPTURE = 0.9999
MIN_SPECTRAL_COUNT = 1024
MIN_SPATIAL_COUNT = 4096
RATIO_TOLERANCE = 1e-3

SWEEP_HEADER = ("width_m", "sigma_lambda_m", "sigma_x_m", "product_m2", "bound_m2", "ratio")


def default_spectral_grid(
    aperture: ApertureProfile, system: OpticalSystem, count: int = 8193
) -> Grid1D:
    """Symmetric wavelength-offset grid wide enough for the kernel's mass.

    Gaussians get +-8 sigma_lambda, slits twice their rectangular support
    with the edges placed midway between samples.
    """
    count = max(count, MIN_SPECTRAL_COUNT + 1)
    if isinstance(aperture, Gaussian):
        half = 8.0 * aperture.sigma / (math.sqrt(2.0) * system.f_nu0)
    elif isinstance(aperture, Slit):
        m = (count - 1) // 4
        step = aperture.width / (system.f_nu0 * (2 * m + 1))
        return Grid1D.symmetric(2 * m * step, 4 * m + 1)
    else:
        half = 1.25 * aperture.half_support / system.f_nu0
    return Grid1D.symmetric(half, count)


def default_spatial_grid(
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelength: float,
    window: float = DEFAULT_WINDOW,
    count: int = MIN_SPATIAL_COUNT + 1,
) -> Grid1D:
    """Sensor-window grid; refined so Gaussian PSFs get >= 16 samples per std."""
    if isinstance(aperture, Gaussian):
        sx = gaussian_sigma_x(aperture.sigma, system, wavelength)
        count = max(count, int(math.ceil(2.0 * window / (sx / 16.0))) + 1)
    if count % 2 == 0:
        count += 1
    return Grid1D.symmetric(window, count)


def gaussian_sigma_lambda(sigma: float, system: OpticalSystem) -> float:
    return sigma / (math.sqrt(2.0) * system.f_nu0)


def gaussian_sigma_x(sigma: float, system: OpticalSystem, wavelength: float) -> float:
    return wavelength * system.focal_length / (2.0 * math.sqrt(2.0) * math.pi * sigma)


def spectral_blur(
    aperture: ApertureProfile, system: OpticalSystem, lambda_grid: Grid1D | None = None
) -> SampledKernel:
    """Spectral blur h_lambda on a grid of wavelength offsets (meters)."""
    if lambda_grid is None:
        lambda_grid = default_spectral_grid(aperture, system)
    lam = lambda_grid.coords
    if not isinstance(aperture, Sampled):
        lo, hi = sorted((-lambda_grid.stop * system.f_nu0, -lambda_grid.start * system.f_nu0))
        captured = aperture.power_fraction(lo, hi)
        if captured < MASS_CAPTURE:
            raise NumericalContractError(
                f"spectral grid captures only {captured:.6f} of the kernel mass"
            )
    values = aperture.evaluate(-lam * system.f_nu0) ** 2
    return SampledKernel(lambda_grid, values, AxisKind.WAVELENGTH, {"wavelength": None})


def spatial_blur(
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelength: float,
    x_grid: Grid1D | None = None,
    window: float = DEFAULT_WINDOW,
) -> SampledKernel:
    """Spatial PSF h_x at ``wavelength`` over the sensor window."""
    system.check_wavelength(wavelength)
    if x_grid is None:
        x_grid = default_spatial_grid(aperture, system, wavelength, window)
    lf = wavelength * system.focal_length
    if isinstance(aperture, Gaussian):
        lo, hi = sorted((-x_grid.stop / lf, -x_grid.start / lf))
        captured = aperture.psd_power_fraction(lo, hi)
        if captured < MASS_CAPTURE:
            raise NumericalContractError(
                f"sensor window captures only {captured:.6f} of the PSF mass"
            )
    values = aperture.psd(-x_grid.coords / lf)
    return SampledKernel(x_grid, values, AxisKind.SPACE, {"wavelength": wavelength})


def kernel_std(kernel: SampledKernel) -> float:
    """Raw second-moment width about coordinate zero (no mean subtraction)."""
    x = kernel.coords
    mass = kernel.mass()
    if not mass > 0:
        raise NumericalContractError("kernel has zero total mass")
    return math.sqrt(trapezoid(x * x * kernel.values, kernel.grid) / mass)


@dataclass(frozen=True)
class UncertaintyReport:
    sigma_lambda: float
    sigma_x: float
    product: float
    bound: float
    ratio: float
    wavelength: float
    window: float

    def as_dict(self) -> dict:
        return asdict(self)


def uncertainty_product(
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelength: float,
    window: float = DEFAULT_WINDOW,
    lambda_grid: Grid1D | None = None,
    x_grid: Grid1D | None = None,
) -> UncertaintyReport:
    s_lam = kernel_std(spectral_blur(aperture, system, lambda_grid))
    s_x = kernel_std(spatial_blur(aperture, system, wavelength, x_grid, window))
    product = s_lam * s_x
    bound = uncertainty_bound(system, wavelength)
    return UncertaintyReport(s_lam, s_x, product, bound, product / bound, wavelength, window)


def make_aperture(kind: str, width: float) -> ApertureProfile:
    """Member of an aperture family: gaussian (width = sigma), slit or open."""
    from spectrobench.aperture import OpenAperture

    families = {"gaussian": Gaussian, "slit": Slit, "open": OpenAperture}
    try:
        return families[kind](width)
    except KeyError:
        raise ValidationError(f"unknown aperture family {kind!r}") from None


@dataclass(frozen=True)
class SweepRow:
    width: float
    report: UncertaintyReport

    def csv_fields(self) -> tuple:
        r = self.report
        return (self.width, r.sigma_lambda, r.sigma_x, r.product, r.bound, r.ratio)


def _check_widths(widths) -> list[float]:
    widths = [float(w) for w in widths]
    if not widths:
        raise ValidationError("sweep needs at least one width")
    if any(not (w > 0) for w in widths):
        raise ValidationError("sweep widths must be positive")
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise ValidationError("sweep widths must be strictly ascending")
    return widths


def tradeoff_sweep(
    kind: str,
    widths,
    system: OpticalSystem,
    wavelength: float,
    window: float = DEFAULT_WINDOW,
) -> list[SweepRow]:
    rows = []
    for w in _check_widths(widths):
        rows.append(SweepRow(w, uncertainty_product(make_aperture(kind, w), system, wavelength, window)))
    return rows


@dataclass(frozen=True)
class ReciprocalFit:
    """Least-squares line 1/sigma_x = slope * sigma_lambda through the origin."""

    slope: float
    r_squared: float
    expected_slope: float

    @property
    def slope_error(self) -> float:
        return self.slope / self.expected_slope - 1.0


def reciprocal_fit(rows: list[SweepRow]) -> ReciprocalFit:
    if len(rows) < 2:
        raise ValidationError("reciprocal fit needs at least two sweep rows")
    s = np.array([r.report.sigma_lambda for r in rows])
    y = np.array([1.0 / r.report.sigma_x for r in rows])
    slope = float(s @ y / (s @ s))
    ss_res = float(np.sum((y - slope * s) ** 2))
    # centered total sum of squares: the stricter of the two R^2 conventions
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ReciprocalFit(slope, r2, 1.0 / rows[0].report.bound)
