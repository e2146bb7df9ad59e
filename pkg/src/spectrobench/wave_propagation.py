"""Plane-by-plane Fourier-optics model of the P1 -> P5 relay.

Every lens is a scaled Fourier transform. Field samples are kept in the
unitary DFT convention, so lens_ft preserves sum(|v|^2) exactly; the physical
1/(j lambda f) factor of each lens is accumulated separately in
``FieldSlice.scale``.

Grid bookkeeping: an input grid with step dx and N samples maps to an output
grid with step lambda f / (N dx). Two lenses therefore return to the input
step, which keeps P1/P3/P5 and P2/P4 on shared grids.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

from spectrobench.aperture import ApertureProfile, Gaussian, Slit
from spectrobench.core import Grid1D, OpticalSystem, ValidationError

# Rational bookkeeping resolution for commensurate grids.
_PM = 1e-12
MAX_COUNT = 1 << 20
SHIFT_MARGIN = 1.25


class SamplingWarning(UserWarning):
    """The grid cannot resolve a feature (e.g. a slit narrower than a sample)."""


class Plane(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"

    def next(self) -> "Plane":
        order = list(Plane)
        i = order.index(self)
        if i == len(order) - 1:
            raise ValidationError("no lens after plane P5")
        return order[i + 1]


@dataclass(frozen=True, eq=False)
class FieldSlice:
    grid: Grid1D
    values: np.ndarray
    wavelength: float
    plane: Plane
    scale: complex = 1.0

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.count,):
            raise ValidationError("field values must match the grid")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")
        if not self.wavelength > 0:
            raise ValidationError("wavelength must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "plane", Plane(self.plane))

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def power(self) -> float:
        return float(np.sum(self.intensity))

    def replace(self, **kw) -> "FieldSlice":
        d = dict(grid=self.grid, values=self.values, wavelength=self.wavelength,
                 plane=self.plane, scale=self.scale)
        d.update(kw)
        return FieldSlice(**d)


def unitary_dft(values: np.ndarray) -> np.ndarray:
    """Centered orthonormal DFT: sample N/2 is the origin on both sides."""
    return sfft.fftshift(sfft.fft(sfft.ifftshift(values), norm="ortho"))


def _check_centered(grid: Grid1D) -> None:
    n = grid.count
    if n % 2 or abs(grid.start + (n // 2) * grid.step) > 1e-9 * grid.step * n:
        raise ValidationError("lens_ft needs an even, FFT-centered grid")


def lens_ft(field: FieldSlice, f: float) -> FieldSlice:
    """Propagate ``field`` one focal length through a lens to the next plane."""
    _check_centered(field.grid)
    lf = field.wavelength * f
    out_grid = Grid1D.fft_centered(lf / (field.grid.count * field.grid.step), field.grid.count)
    return FieldSlice(
        out_grid,
        unitary_dft(field.values),
        field.wavelength,
        field.plane.next(),
        field.scale / (1j * lf),
    )


def apply_pupil(field: FieldSlice, aperture: ApertureProfile) -> FieldSlice:
    """Multiply the P2 field by the pupil amplitude a(x)."""
    if field.plane is not Plane.P2:
        raise ValidationError(f"pupil codes sit on P2, field is on {field.plane.value}")
    a = aperture.evaluate(field.grid.coords)
    if np.count_nonzero(a) <= 1:
        warnings.warn("pupil opening is narrower than one grid step", SamplingWarning, stacklevel=2)
    return field.replace(values=field.values * a)


def apply_grating_first_order(field: FieldSlice, system: OpticalSystem) -> FieldSlice:
    """Keep only the k=1 order: a linear phase ramp exp(+2 pi i nu0 x) on P3.

    The next lens turns the ramp into the rainbow-plane shift x -> x - lambda f nu0.
    """
    if field.plane is not Plane.P3:
        raise ValidationError(f"the grating sits on P3, field is on {field.plane.value}")
    ramp = np.exp(2j * np.pi * system.groove_density * field.grid.coords)
    return field.replace(values=field.values * ramp)


@dataclass(frozen=True)
class PointSource:
    """Point on P1 at ``x0`` with a line spectrum of (wavelength, intensity) pairs."""

    x0: float
    spectrum: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        spec = tuple((float(l), float(i)) for l, i in self.spectrum)
        if not spec:
            raise ValidationError("point source needs at least one spectral line")
        if any(l <= 0 or not math.isfinite(l) for l, _ in spec):
            raise ValidationError("line wavelengths must be positive")
        if any(i < 0 or not math.isfinite(i) for _, i in spec):
            raise ValidationError("line intensities must be nonnegative")
        if not any(i > 0 for _, i in spec):
            raise ValidationError("point source needs a line with positive intensity")
        object.__setattr__(self, "spectrum", spec)

    @property
    def wavelengths(self) -> list[float]:
        return [l for l, _ in self.spectrum]


@dataclass(frozen=True)
class PropagationPlan:
    """Shared sampling for every line of a measurement.

    ``pupil_step`` is the P2 (= P4) sample spacing at ``reference_wavelength``.
    ``commensurate`` records whether the grating shift lands on whole samples
    for every line (and, for slits, whether the edges fall midway between
    samples).
    """

    count: int
    pupil_step: float
    reference_wavelength: float
    focal_length: float
    commensurate: bool

    @property
    def image_step(self) -> float:
        """P1/P3/P5 sample spacing."""
        return self.reference_wavelength * self.focal_length / (self.count * self.pupil_step)

    def pupil_grid(self) -> Grid1D:
        return Grid1D.fft_centered(self.pupil_step, self.count)

    def image_grid(self) -> Grid1D:
        return Grid1D.fft_centered(self.image_step, self.count)


def _to_pm(x: float) -> int:
    return int(round(x / _PM))


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def plan_propagation(
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelengths: Sequence[float],
    window: float = 1e-3,
    samples_per_feature: float | None = None,
) -> PropagationPlan:
    """Choose N and the pupil-plane step for a set of source lines.

    The P2/P4 extent holds the largest rainbow shift plus the pupil (4 sigma
    or 2 W each side) with 25% margin. Where the numbers allow, the step
    divides every shift lambda f nu0 exactly and places slit edges midway
    between samples; both keep the first-order selection free of sub-sample
    interpolation.
    """
    if not wavelengths:
        raise ValidationError("need at least one wavelength")
    lam_ref = float(wavelengths[0])
    shifts = [system.dispersion(l) for l in wavelengths]

    if isinstance(aperture, Gaussian):
        spf = samples_per_feature or 32.0
        half_pupil = 4.0 * aperture.sigma
    elif isinstance(aperture, Slit):
        spf = samples_per_feature or 256.0
        half_pupil = 2.0 * aperture.width
        if aperture.width >= 4e-3:
            half_pupil = aperture.width
    else:
        spf = samples_per_feature or 2.0
        half_pupil = 1.25 * aperture.half_support
    target = aperture.feature_size / spf
    # P5 must span the sensor window at the shortest wavelength
    target = min(target, min(wavelengths) * system.focal_length / (2.0 * window))
    half_extent = SHIFT_MARGIN * (max(shifts) + half_pupil)

    step, commensurate = None, False
    shift_pm = [_to_pm(s) for s in shifts]
    if isinstance(aperture, Slit):
        w_pm = _to_pm(aperture.width)
        q = reduce(_lcm, (w_pm // math.gcd(w_pm, s) for s in shift_pm), 1)
        if q % 2 == 1:
            k = max(1, math.ceil(aperture.width / (target * q)))
            if k % 2 == 0:
                k += 1
            cand = aperture.width / (q * k)
            if 2.0 * half_extent / cand <= MAX_COUNT:
                step, commensurate = cand, True
    if step is None:
        g = reduce(math.gcd, shift_pm) * _PM
        cand = g / max(1, math.ceil(g / target))
        if 2.0 * half_extent / cand <= MAX_COUNT:
            step, commensurate = cand, not isinstance(aperture, Slit)
        else:
            step = target
    if isinstance(aperture, Slit) and not commensurate:
        warnings.warn(
            "slit edges and grating shifts are not commensurate with the grid; "
            "expect sub-sample edge errors",
            SamplingWarning,
            stacklevel=2,
        )

    count = sfft.next_fast_len(2 * int(math.ceil(half_extent / step)))
    if count % 2:
        count = sfft.next_fast_len(count + 1)
        while count % 2:
            count = sfft.next_fast_len(count + 1)
    return PropagationPlan(count, step, lam_ref, system.focal_length, commensurate)


def propagate(
    source_x0: float,
    amplitude: complex,
    wavelength: float,
    aperture: ApertureProfile,
    system: OpticalSystem,
    plan: PropagationPlan,
    fixed: Plane = Plane.P5,
    rainbow_mask: Callable[[np.ndarray], np.ndarray] | None = None,
) -> dict[Plane, FieldSlice]:
    """Run one monochromatic point source through all five planes.

    ``fixed`` selects which grid family is wavelength independent: P4 keeps
    the P2/P4 step fixed (rainbow-plane measurements), P5 keeps P1/P3/P5
    fixed (image-plane measurements). The source is snapped to the nearest
    P1 sample. ``rainbow_mask`` optionally multiplies the P4 field by a
    transmission evaluated on P4 coordinates.
    """
    n, f = plan.count, system.focal_length
    if fixed is Plane.P4:
        dx1 = wavelength * f / (n * plan.pupil_step)
    elif fixed is Plane.P5:
        dx1 = plan.image_step
    else:
        raise ValidationError("fixed plane must be P4 or P5")
    g1 = Grid1D.fft_centered(dx1, n)
    i0 = n // 2 + int(round(source_x0 / dx1))
    if not 0 <= i0 < n:
        raise ValidationError("source lies outside the P1 grid")
    v = np.zeros(n, dtype=complex)
    v[i0] = amplitude

    planes = {}
    fld = FieldSlice(g1, v, wavelength, Plane.P1)
    planes[Plane.P1] = fld
    fld = apply_pupil(lens_ft(fld, f), aperture)
    planes[Plane.P2] = fld
    fld = apply_grating_first_order(lens_ft(fld, f), system)
    planes[Plane.P3] = fld
    fld = lens_ft(fld, f)
    if rainbow_mask is not None:
        fld = fld.replace(values=fld.values * rainbow_mask(fld.grid.coords))
    planes[Plane.P4] = fld
    planes[Plane.P5] = lens_ft(fld, f)
    return planes


@dataclass(frozen=True, eq=False)
class Measurement:
    grid: Grid1D
    intensity: np.ndarray
    plane: Plane
    camera_response: tuple[tuple[float, float], ...] = field(default=())

    def normalized(self) -> np.ndarray:
        return self.intensity / self.intensity.max()


def measure(
    source: PointSource,
    aperture: ApertureProfile,
    system: OpticalSystem,
    plane: Plane | str,
    camera_response: Callable[[float], float] | None = None,
    plan: PropagationPlan | None = None,
    window: float = 1e-3,
    rainbow_mask: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Measurement:
    """Camera image on P4 or P5 of a point source; lines add in intensity.

    Each line contributes c(lambda) |v|^2 / (lambda f)^2. With unitary field
    samples this reproduces the radiometric wavelength dependence of the
    continuous model up to a wavelength-independent constant.
    """
    plane = Plane(plane)
    if plane not in (Plane.P4, Plane.P5):
        raise ValidationError("measurements are taken on P4 or P5")
    if plan is None:
        plan = plan_propagation(aperture, system, source.wavelengths, window)
    response = camera_response or (lambda _lam: 1.0)
    f = system.focal_length

    per_line, sampled_c = [], []
    for lam, inten in source.spectrum:
        c = float(response(lam))
        if c < 0:
            raise ValidationError("camera response must be nonnegative")
        sampled_c.append((lam, c))
        fields = propagate(source.x0, math.sqrt(inten), lam, aperture, system, plan,
                           fixed=plane, rainbow_mask=rainbow_mask)
        per_line.append(c * fields[plane].intensity / (lam * f) ** 2)
    grid = plan.pupil_grid() if plane is Plane.P4 else plan.image_grid()
    total = np.sum(np.stack(per_line), axis=0)
    return Measurement(grid, total, plane, tuple(sampled_c))


def plateau_center(grid: Grid1D, intensity: np.ndarray, rel_tol: float = 1e-9) -> float:
    """Midpoint of the samples within ``rel_tol`` of the maximum."""
    idx = np.nonzero(intensity >= intensity.max() * (1.0 - rel_tol))[0]
    return 0.5 * (grid.coordinate(idx[0]) + grid.coordinate(idx[-1]))


def linf_rel_error(measured: np.ndarray, reference: np.ndarray) -> float:
    """Max abs difference after normalizing each curve to unit peak."""
    return float(np.max(np.abs(measured / measured.max() - reference / reference.max())))


@dataclass(frozen=True)
class AgreementReport:
    wavelength: float
    spectral_linf: float
    spatial_linf: float
    p4_peak: float
    p4_expected: float
    p4_step: float
    p5_step: float
    commensurate: bool

    @property
    def peak_offset_steps(self) -> float:
        return abs(self.p4_peak - self.p4_expected) / self.p4_step


def oracle_agreement(
    aperture: ApertureProfile,
    system: OpticalSystem,
    wavelength: float,
    window: float = 1e-3,
) -> AgreementReport:
    """Compare propagated P4/P5 kernels of an on-axis point with the closed forms."""
    from spectrobench.analytic_blur import spatial_blur, spectral_blur

    src = PointSource(0.0, ((wavelength, 1.0),))
    plan = plan_propagation(aperture, system, [wavelength], window)
    m4 = measure(src, aperture, system, Plane.P4, plan=plan)
    m5 = measure(src, aperture, system, Plane.P5, plan=plan)

    shift = system.dispersion(wavelength)
    g4 = m4.grid
    lam_grid = Grid1D((g4.start - shift) / system.f_nu0, g4.step / system.f_nu0, g4.count)
    h_lam = spectral_blur(aperture, system, lam_grid).values
    h_x = spatial_blur(aperture, system, wavelength, m5.grid).values
    return AgreementReport(
        wavelength=wavelength,
        spectral_linf=linf_rel_error(m4.intensity, h_lam),
        spatial_linf=linf_rel_error(m5.intensity, h_x),
        p4_peak=plateau_center(g4, m4.intensity),
        p4_expected=shift,
        p4_step=g4.step,
        p5_step=m5.grid.step,
        commensurate=plan.commensurate,
    )
