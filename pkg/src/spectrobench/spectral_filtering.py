"""Rainbow-plane (P4) masks, narrowband-filter PSFs and scene filtering.

On P4 a monochromatic source at lambda produces the flipped pupil centered
at lambda f nu0. A mask multiplies that field; the image-plane PSF is the
scaled power spectrum of the product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from spectrobench.analytic_blur import DEFAULT_WINDOW, kernel_std
from spectrobench.aperture import ApertureProfile, Gaussian, Slit
from spectrobench.core import (
    AxisKind,
    Grid1D,
    NumericalContractError,
    OpticalSystem,
    SampledKernel,
    ValidationError,
)
from spectrobench.units import parse_length

_DFT_CHUNK = 256


class FullyBlockedError(NumericalContractError):
    """The mask removes all light of the source line; the PSF is undefined."""


class RainbowMask:
    """Transmission t(x) in [0, 1] on P4 coordinates."""

    def transmission(self, x, system: OpticalSystem) -> np.ndarray:
        raise NotImplementedError

    def at_wavelength(self, wavelengths, system: OpticalSystem) -> np.ndarray:
        """Transmission sampled at x = lambda f nu0 (ignores the pupil's spectral blur)."""
        return self.transmission(np.asarray(wavelengths, dtype=float) * system.f_nu0, system)


def _check_center(center: float) -> None:
    if not (math.isfinite(center) and center > 0):
        raise ValidationError("mask center wavelength must be positive")


@dataclass(frozen=True)
class SlitMask(RainbowMask):
    center: float
    width: float

    def __post_init__(self) -> None:
        _check_center(self.center)
        if not self.width > 0:
            raise ValidationError("mask width must be positive")

    def transmission(self, x, system):
        x = np.asarray(x, dtype=float)
        return (np.abs(x - self.center * system.f_nu0) <= self.width / 2.0).astype(float)


@dataclass(frozen=True)
class BlockerMask(SlitMask):
    """Complement of a slit: opaque over the band, clear elsewhere."""

    def transmission(self, x, system):
        return np.clip(1.0 - super().transmission(x, system), 0.0, 1.0)


@dataclass(frozen=True)
class GaussianMask(RainbowMask):
    """exp(-(x - c)^2 / 2 sigma^2), the same parameterization as the Gaussian pupil."""

    center: float
    sigma: float

    def __post_init__(self) -> None:
        _check_center(self.center)
        if not self.sigma > 0:
            raise ValidationError("mask sigma must be positive")

    def transmission(self, x, system):
        x = np.asarray(x, dtype=float)
        d = x - self.center * system.f_nu0
        return np.exp(-(d * d) / (2.0 * self.sigma**2))


@dataclass(frozen=True, eq=False)
class SampledMask(RainbowMask):
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.count,):
            raise ValidationError("mask samples must match their grid")
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ValidationError("mask transmission must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def transmission(self, x, system):
        return np.interp(np.asarray(x, dtype=float), self.grid.coords, self.values, left=0.0, right=0.0)


def parse_mask(spec: str) -> RainbowMask:
    """``slitmask:center=532nm,w=300um``, ``gaussmask:center=532nm,sigma=500um``, ``blocker:center=532nm,w=300um``."""
    kind, _, rest = spec.strip().partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValidationError(f"expected key=value in mask spec, got {item!r}")
        params[key.strip().lower()] = parse_length(value)
    try:
        if kind == "slitmask":
            mask = SlitMask(params.pop("center"), params.pop("w"))
        elif kind == "blocker":
            mask = BlockerMask(params.pop("center"), params.pop("w"))
        elif kind == "gaussmask":
            mask = GaussianMask(params.pop("center"), params.pop("sigma"))
        else:
            raise ValidationError(f"unknown mask kind {kind!r}")
    except KeyError as exc:
        raise ValidationError(f"mask {kind!r} needs parameter {exc.args[0]!r}") from None
    if params:
        raise ValidationError(f"unexpected mask parameters: {', '.join(sorted(params))}")
    return mask


def make_mask(family: str, center: float, width: float) -> RainbowMask:
    if family in ("slit", "slitmask"):
        return SlitMask(center, width)
    if family in ("gaussian", "gaussmask"):
        return GaussianMask(center, width)
    if family == "blocker":
        return BlockerMask(center, width)
    raise ValidationError(f"unknown mask family {family!r}")


@dataclass(frozen=True, eq=False)
class RainbowProfile:
    """Field amplitude just after the mask, sampled on P4."""

    grid: Grid1D
    values: np.ndarray
    wavelength: float

    @property
    def peak(self) -> float:
        return float(self.values.max())

    @property
    def blocked(self) -> bool:
        return not np.any(self.values > 0)

    def support_width(self) -> float:
        """Distance between the outermost open samples."""
        nz = np.nonzero(self.values > 0)[0]
        if nz.size == 0:
            return 0.0
        return float((nz[-1] - nz[0]) * self.grid.step)

    def power(self) -> float:
        return float(np.trapezoid(self.values**2, dx=self.grid.step))

    def centroid(self) -> float:
        p = self.values**2
        return float(np.sum(p * self.grid.coords) / np.sum(p))


def profile_grid(aperture: ApertureProfile, wavelength: float, system: OpticalSystem,
                 samples: int = 4096) -> Grid1D:
    """P4 grid centered on the source's rainbow position covering the pupil image."""
    if isinstance(aperture, Gaussian):
        half, step = 8.0 * aperture.sigma, aperture.sigma / 64.0
    elif isinstance(aperture, Slit):
        half, step = 0.5 * aperture.width * 1.02, aperture.width / samples
    else:
        half = aperture.half_support
        step = min(aperture.feature_size / 2.0, 2.0 * half / samples)
    n = 2 * int(math.ceil(half / step)) + 1
    c = system.dispersion(wavelength)
    return Grid1D(c - (n // 2) * step, step, n)


def masked_aperture_product(
    aperture: ApertureProfile,
    mask: RainbowMask | None,
    wavelength: float,
    system: OpticalSystem,
    grid: Grid1D | None = None,
) -> RainbowProfile:
    """a(-(x - lambda f nu0)) * t(x) on the rainbow plane."""
    system.check_wavelength(wavelength)
    if isinstance(mask, (SlitMask, GaussianMask)):
        system.check_wavelength(mask.center)
    if grid is None:
        grid = profile_grid(aperture, wavelength, system)
    x = grid.coords
    values = aperture.evaluate(-(x - system.dispersion(wavelength)))
    if mask is not None:
        values = values * mask.transmission(x, system)
    return RainbowProfile(grid, values, wavelength)


def profile_psd(profile: RainbowProfile, u: np.ndarray) -> np.ndarray:
    """|P(u)|^2 of the masked profile by a direct trapezoidal Fourier sum."""
    w = profile.values * profile.grid.step
    w = w.copy()
    w[0] *= 0.5
    w[-1] *= 0.5
    nz = np.nonzero(w)[0]
    x = profile.grid.coords[nz]
    # the centroid offset only adds a phase; removing it keeps the exponent small
    x = x - profile.grid.coords[nz].mean()
    w = w[nz]
    u = np.asarray(u, dtype=float)
    out = np.empty(u.size)
    flat = u.ravel()
    for i in range(0, flat.size, _DFT_CHUNK):
        uu = flat[i : i + _DFT_CHUNK]
        out[i : i + _DFT_CHUNK] = np.abs(np.exp(-2j * np.pi * np.outer(uu, x)) @ w) ** 2
    return out.reshape(u.shape)


def filtered_psf(
    aperture: ApertureProfile,
    mask: RainbowMask | None,
    wavelength: float,
    system: OpticalSystem,
    x_grid: Grid1D | None = None,
    window: float = DEFAULT_WINDOW,
    profile: RainbowProfile | None = None,
) -> SampledKernel:
    """Image-plane PSF of a monochromatic source seen through the rainbow mask."""
    if profile is None:
        profile = masked_aperture_product(aperture, mask, wavelength, system)
    if profile.blocked:
        raise FullyBlockedError("fully blocked: the mask removes the whole source line")
    if x_grid is None:
        x_grid = Grid1D.symmetric(window, 4097)
    lf = wavelength * system.focal_length
    values = profile_psd(profile, -x_grid.coords / lf)
    return SampledKernel(x_grid, values, AxisKind.SPACE, {"wavelength": wavelength})


@dataclass(frozen=True)
class OffsetRow:
    offset: float
    psf_std: float | None
    peak_intensity: float
    field_peak: float

    @property
    def blocked(self) -> bool:
        return self.psf_std is None


def psf_vs_offset_sweep(
    aperture: ApertureProfile,
    mask_family: str,
    mask_width: float,
    offsets,
    system: OpticalSystem,
    source_wavelength: float,
    x_grid: Grid1D | None = None,
    window: float = DEFAULT_WINDOW,
) -> list[OffsetRow]:
    """PSF std and peak versus the gap between mask center and source line.

    Fully blocked offsets are kept with ``psf_std=None`` and zero peak.
    """
    if x_grid is None:
        x_grid = Grid1D.symmetric(window, 4097)
    rows = []
    for d in offsets:
        mask = make_mask(mask_family, source_wavelength + d, mask_width)
        profile = masked_aperture_product(aperture, mask, source_wavelength, system)
        if profile.blocked:
            rows.append(OffsetRow(float(d), None, 0.0, 0.0))
            continue
        psf = filtered_psf(aperture, mask, source_wavelength, system, x_grid, profile=profile)
        rows.append(OffsetRow(float(d), kernel_std(psf), float(psf.values.max()), profile.peak))
    return rows


def effective_filter(
    mask: RainbowMask,
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelengths,
) -> np.ndarray:
    """Fraction of each line's rainbow-plane power passed by the mask.

    This is the mask transmission seen through the pupil's spectral blur:
    integral |a(-(x - lambda f nu0))|^2 |t(x)|^2 dx / integral |a|^2 dx.
    """
    out = []
    for lam in np.asarray(wavelengths, dtype=float):
        g = profile_grid(aperture, lam, system)
        open_ = masked_aperture_product(aperture, None, lam, system, g)
        masked = masked_aperture_product(aperture, mask, lam, system, g)
        out.append(masked.power() / open_.power())
    return np.array(out)


@dataclass(frozen=True, eq=False)
class HyperspectralCube:
    """H(x, y, lambda) stored as ``data[k, row, col]`` for wavelength k."""

    wavelengths: np.ndarray
    data: np.ndarray

    def __post_init__(self) -> None:
        lam = np.array(self.wavelengths, dtype=float)
        data = np.array(self.data, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValidationError("cube needs at least one wavelength")
        if np.any(np.diff(lam) <= 0):
            raise ValidationError("cube wavelengths must be strictly ascending")
        if data.ndim != 3 or data.shape[0] != lam.size:
            raise ValidationError("cube data must have shape (nlambda, height, width)")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValidationError("cube data must be finite and nonnegative")
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "data", data)

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    def check_range(self, system: OpticalSystem) -> None:
        if self.wavelengths[0] < system.wavelength_min or self.wavelengths[-1] > system.wavelength_max:
            raise ValidationError("cube wavelengths fall outside the system's range")

    def spectral_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weights over wavelength (unit weight for a single slice)."""
        lam = self.wavelengths
        if lam.size == 1:
            return np.ones(1)
        w = np.zeros_like(lam)
        d = np.diff(lam)
        w[:-1] += d / 2.0
        w[1:] += d / 2.0
        return w


def _pixel_kernel(psd_at, wavelength: float, system: OpticalSystem,
                  pixel_pitch: float, half_pixels: int) -> np.ndarray:
    x = np.arange(-half_pixels, half_pixels + 1) * pixel_pitch
    k = psd_at(-x / (wavelength * system.focal_length))
    return k / k.sum()


def filter_scene(
    cube: HyperspectralCube,
    aperture: ApertureProfile,
    system: OpticalSystem,
    pixel_pitch: float,
    spectral_filter=None,
    mask: RainbowMask | None = None,
    central_wavelength: float | None = None,
    kernel_half_width: int | None = None,
) -> np.ndarray:
    """Grayscale image I(x, y) = integral H * h_x(lambda) f(lambda) dlambda.

    Each wavelength slice is blurred along x (the dispersion axis) by the PSF
    at that wavelength, or at ``central_wavelength`` when the single-PSF
    approximation is requested. Pass either ``spectral_filter`` (values in
    [0, 1] on the cube's wavelengths) or a rainbow ``mask``; a mask acts through
    the pupil's spectral blur and also reshapes each line's PSF.
    """
    cube.check_range(system)
    if spectral_filter is not None and mask is not None:
        raise ValidationError("give either a spectral filter or a rainbow mask, not both")
    n_lam = cube.wavelengths.size
    if spectral_filter is None:
        spectral_filter = np.ones(n_lam)
    spectral_filter = np.asarray(spectral_filter, dtype=float)
    if spectral_filter.shape != (n_lam,):
        raise ValidationError(
            f"filter has {spectral_filter.size} samples, cube has {n_lam} wavelengths"
        )
    if np.any(spectral_filter < 0) or np.any(spectral_filter > 1):
        raise ValidationError("filter values must lie in [0, 1]")
    if pixel_pitch <= 0:
        raise ValidationError("pixel pitch must be positive")
    if central_wavelength is not None:
        system.check_wavelength(central_wavelength)
    half = kernel_half_width if kernel_half_width is not None else cube.width

    weights = cube.spectral_weights()
    image = np.zeros(cube.data.shape[1:])
    for k, lam in enumerate(cube.wavelengths):
        slice_ = cube.data[k]
        if not np.any(slice_):
            continue
        lam_psf = central_wavelength or lam
        if mask is None:
            gain = spectral_filter[k]
            psd_at = aperture.psd
        else:
            profile = masked_aperture_product(aperture, mask, lam, system)
            if profile.blocked:
                continue
            open_ = masked_aperture_product(aperture, None, lam, system, profile.grid)
            gain = profile.power() / open_.power()
            psd_at = lambda u, p=profile: profile_psd(p, u)
        if gain == 0:
            continue
        kern = _pixel_kernel(psd_at, lam_psf, system, pixel_pitch, half)
        blurred = convolve1d(slice_, kern, axis=1, mode="constant", cval=0.0)
        image += weights[k] * gain * blurred
    return image


def two_laser_cube(
    width: int = 256,
    height: int = 32,
    wavelengths=None,
    lines=(520e-9, 532e-9),
    columns=(96, 160),
    spot_sigma_px: float = 1.5,
) -> HyperspectralCube:
    """Synthetic scene: one small spot per laser line at distinct columns."""
    if wavelengths is None:
        wavelengths = np.round(np.arange(500, 551) * 1e-9, 15)
    wavelengths = np.asarray(wavelengths, dtype=float)
    data = np.zeros((wavelengths.size, height, width))
    yy, xx = np.mgrid[0:height, 0:width]
    for lam, col in zip(lines, columns):
        k = int(np.argmin(np.abs(wavelengths - lam)))
        if not math.isclose(wavelengths[k], lam, rel_tol=1e-9):
            raise ValidationError(f"laser line {lam} is not on the cube's wavelength axis")
        r2 = (xx - col) ** 2 + (yy - height / 2.0) ** 2
        data[k] += np.exp(-r2 / (2.0 * spot_sigma_px**2))
    return HyperspectralCube(wavelengths, data)


def bar_target_cube(
    width: int = 256,
    height: int = 64,
    wavelengths=None,
    periods=(32, 16, 8, 4, 2),
) -> HyperspectralCube:
    """USAF-like stripes of decreasing period along x with a flat spectrum."""
    if wavelengths is None:
        wavelengths = np.round(np.arange(450, 651, 10) * 1e-9, 15)
    wavelengths = np.asarray(wavelengths, dtype=float)
    img = np.zeros((height, width))
    seg = width // len(periods)
    for i, p in enumerate(periods):
        cols = np.arange(i * seg, (i + 1) * seg)
        bars = ((cols - i * seg) // max(p // 2, 1)) % 2 == 0
        img[height // 4 : 3 * height // 4, cols[bars]] = 1.0
    return HyperspectralCube(wavelengths, np.repeat(img[None], wavelengths.size, axis=0))


def spot_stats(image: np.ndarray, pixel_pitch: float) -> tuple[float, float]:
    """Total energy and x-std (meters, about the centroid) of an image."""
    col = image.sum(axis=0)
    e = float(col.sum())
    if e <= 0:
        return 0.0, math.nan
    x = np.arange(col.size) * pixel_pitch
    c = float(np.sum(col * x) / e)
    return e, math.sqrt(float(np.sum(col * (x - c) ** 2) / e))
