"""Pupil-code amplitude profiles a(x) and their power spectra |A(u)|^2.

Fourier convention: A(u) = integral of a(x) exp(-2 pi i u x) dx, with u in
cycles per meter. Only the dispersion axis x is modeled; profiles are real
and nonnegative because the light is spatially incoherent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erf

from spectrobench.core import Grid1D, ValidationError
from spectrobench.units import parse_length

DEFAULT_OPEN_WIDTH = 10e-3

# Block size for direct DFT evaluation; bounds temporary memory.
_DFT_CHUNK = 512


class ApertureProfile:
    """Base class for the pupil codes. Instances are immutable."""

    def evaluate(self, x):
        raise NotImplementedError

    def psd(self, u):
        raise NotImplementedError

    def scaled(self, s: float) -> "ApertureProfile":
        raise NotImplementedError

    def power_fraction(self, lo: float, hi: float) -> float:
        """Fraction of the integral of |a|^2 that falls inside [lo, hi]."""
        raise NotImplementedError

    @property
    def half_support(self) -> float:
        """Half-width beyond which a(x) is negligible (exactly 0 for slits)."""
        raise NotImplementedError

    @property
    def feature_size(self) -> float:
        """Smallest length scale that sampling grids must resolve."""
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(ApertureProfile):
    """a(x) = exp(-x^2 / 2 sigma^2)."""

    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError("gaussian sigma must be positive")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x * x) / (2.0 * self.sigma**2))

    def psd(self, u):
        u = np.asarray(u, dtype=float)
        s2 = self.sigma**2
        return 2.0 * math.pi * s2 * np.exp(-4.0 * math.pi**2 * s2 * u * u)

    def scaled(self, s: float) -> "Gaussian":
        _check_scale(s)
        return Gaussian(self.sigma / s)

    def power_fraction(self, lo: float, hi: float) -> float:
        # |a|^2 = exp(-x^2/sigma^2) is a normal density with std sigma/sqrt(2)
        return 0.5 * float(erf(hi / self.sigma) - erf(lo / self.sigma))

    def psd_power_fraction(self, lo: float, hi: float) -> float:
        k = 2.0 * math.pi * self.sigma
        return 0.5 * float(erf(hi * k) - erf(lo * k))

    @property
    def half_support(self) -> float:
        return 6.0 * self.sigma

    @property
    def feature_size(self) -> float:
        return self.sigma


@dataclass(frozen=True)
class Slit(ApertureProfile):
    """Indicator of |x| <= width/2."""

    width: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValidationError("slit width must be positive")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return (np.abs(x) <= self.width / 2.0).astype(float)

    def psd(self, u):
        u = np.asarray(u, dtype=float)
        return self.width**2 * np.sinc(self.width * u) ** 2

    def scaled(self, s: float) -> "Slit":
        _check_scale(s)
        return type(self)(self.width / s)

    def power_fraction(self, lo: float, hi: float) -> float:
        h = self.width / 2.0
        return max(0.0, min(hi, h) - max(lo, -h)) / self.width

    def cell_average(self, grid: Grid1D) -> np.ndarray:
        """Per-sample open fraction of the cell [x - step/2, x + step/2]."""
        x = grid.coords
        h = self.width / 2.0
        lo = np.maximum(x - grid.step / 2.0, -h)
        hi = np.minimum(x + grid.step / 2.0, h)
        return np.clip(hi - lo, 0.0, None) / grid.step

    @property
    def half_support(self) -> float:
        return self.width / 2.0

    @property
    def feature_size(self) -> float:
        return self.width


@dataclass(frozen=True)
class OpenAperture(Slit):
    """Fully open lens aperture, modeled as a wide slit of finite width."""

    width: float = DEFAULT_OPEN_WIDTH


@dataclass(frozen=True, eq=False)
class Sampled(ApertureProfile):
    """Tabulated amplitude, linearly interpolated and zero outside its grid."""

    grid: Grid1D
    amplitude: np.ndarray

    def __post_init__(self) -> None:
        amp = np.array(self.amplitude, dtype=float)
        if amp.shape != (self.grid.count,):
            raise ValidationError("sampled amplitude must match its grid")
        if not np.all(np.isfinite(amp)):
            raise ValidationError("sampled amplitude must be finite")
        if np.any(amp < 0):
            raise ValidationError("sampled amplitude must be nonnegative")
        if not np.any(amp > 0):
            raise ValidationError("sampled amplitude needs at least one nonzero sample")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid.coords, self.amplitude, left=0.0, right=0.0)

    def transform(self, u) -> np.ndarray:
        """Trapezoidal discrete Fourier sum of the samples at frequencies ``u``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        x = self.grid.coords
        w = self.amplitude * self.grid.step
        w = w.copy()
        w[0] *= 0.5
        w[-1] *= 0.5
        nz = np.nonzero(w)[0]
        x, w = x[nz], w[nz]
        out = np.empty(u.shape, dtype=complex)
        flat_u, flat_out = u.ravel(), out.reshape(-1)
        for i in range(0, flat_u.size, _DFT_CHUNK):
            uu = flat_u[i : i + _DFT_CHUNK]
            flat_out[i : i + _DFT_CHUNK] = np.exp(-2j * np.pi * np.outer(uu, x)) @ w
        return out

    def psd(self, u):
        shape = np.shape(u)
        return (np.abs(self.transform(u)) ** 2).reshape(shape)

    def scaled(self, s: float) -> "Sampled":
        _check_scale(s)
        g = self.grid
        return Sampled(Grid1D(g.start / s, g.step / s, g.count), self.amplitude)

    def power_fraction(self, lo: float, hi: float) -> float:
        x = self.grid.coords
        p = self.amplitude**2
        total = np.trapezoid(p, x)
        inside = (x >= lo) & (x <= hi)
        if inside.sum() < 2:
            return 0.0
        return float(np.trapezoid(p[inside], x[inside]) / total)

    @property
    def half_support(self) -> float:
        nz = np.nonzero(self.amplitude)[0]
        x = self.grid.coords
        return float(max(abs(x[nz[0]]), abs(x[nz[-1]])) + self.grid.step)

    @property
    def feature_size(self) -> float:
        return self.grid.step


def _check_scale(s: float) -> None:
    if not (math.isfinite(s) and s > 0):
        raise ValidationError("scale factor must be positive")


def evaluate(aperture: ApertureProfile, x):
    return aperture.evaluate(x)


def fourier_psd(aperture: ApertureProfile, u):
    """|A(u)|^2 under the module's Fourier convention."""
    return aperture.psd(u)


def scale(aperture: ApertureProfile, s: float) -> ApertureProfile:
    """Return the profile x -> a(s x)."""
    return aperture.scaled(s)


def sample(aperture: ApertureProfile, grid: Grid1D, antialias: bool = True) -> Sampled:
    """Tabulate ``aperture`` on ``grid``.

    With ``antialias`` slit edges get their fractional cell coverage, so the
    tabulated opening has the exact analytic area.
    """
    if antialias and isinstance(aperture, Slit):
        values = aperture.cell_average(grid)
    else:
        values = aperture.evaluate(grid.coords)
    return Sampled(grid, values)


def load_sampled(path: str | Path) -> Sampled:
    """Read a two-column CSV (x in meters, amplitude) on a uniform grid."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ValidationError(f"bad row in {path}: {rec!r}") from None
                continue  # header line
    if len(rows) < 2:
        raise ValidationError(f"{path}: need at least two samples")
    x, a = np.array(rows).T
    steps = np.diff(x)
    step = float(steps.mean())
    if step <= 0 or np.max(np.abs(steps - step)) > 1e-6 * step:
        raise ValidationError(f"{path}: x samples must be uniform and ascending")
    return Sampled(Grid1D(float(x[0]), step, len(x)), a)


def parse_aperture(spec: str) -> ApertureProfile:
    """Parse ``gaussian:sigma=500um``, ``slit:w=450um``, ``open[:w=10mm]`` or ``sampled:file=path``."""
    kind, _, rest = spec.strip().partition(":")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValidationError(f"expected key=value in aperture spec, got {item!r}")
        params[key.strip().lower()] = value.strip()

    def take(*names):
        for n in names:
            if n in params:
                return params.pop(n)
        raise ValidationError(f"aperture {kind!r} needs parameter {names[0]!r}")

    kind = kind.lower()
    if kind == "gaussian":
        ap = Gaussian(parse_length(take("sigma")))
    elif kind == "slit":
        ap = Slit(parse_length(take("w", "width")))
    elif kind == "open":
        ap = OpenAperture(parse_length(params.pop("w")) if "w" in params else DEFAULT_OPEN_WIDTH)
    elif kind == "sampled":
        ap = load_sampled(take("file"))
    else:
        raise ValidationError(f"unknown aperture kind {kind!r}")
    if params:
        raise ValidationError(f"unexpected aperture parameters: {', '.join(sorted(params))}")
    return ap


def describe(aperture: ApertureProfile) -> str:
    if isinstance(aperture, Gaussian):
        return f"gaussian:sigma={aperture.sigma * 1e6:.6g}um"
    if isinstance(aperture, OpenAperture):
        return f"open:w={aperture.width * 1e3:.6g}mm"
    if isinstance(aperture, Slit):
        return f"slit:w={aperture.width * 1e6:.6g}um"
    return f"sampled:n={aperture.grid.count}"
