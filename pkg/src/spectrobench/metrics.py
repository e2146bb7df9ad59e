"""MTF and contrast-threshold resolution of sampled blur kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from spectrobench.analytic_blur import (
    DEFAULT_WINDOW,
    _check_widths,
    make_aperture,
    spatial_blur,
    spectral_blur,
)
from spectrobench.core import AxisKind, NumericalContractError, OpticalSystem, SampledKernel, ValidationError

MTF_HEADER = ("width_m", "spectral_res_cyc_per_m", "spatial_res_cyc_per_m", "threshold")


@dataclass(frozen=True, eq=False)
class MtfCurve:
    frequencies: np.ndarray
    contrast: np.ndarray
    axis_kind: AxisKind = AxisKind.SPACE


def mtf(kernel: SampledKernel, pad_factor: int = 8) -> MtfCurve:
    """|FT(kernel)| normalized to 1 at zero frequency.

    Zero padding by ``pad_factor`` refines the frequency axis so that the
    linear interpolation in :func:`resolution_at_contrast` stays accurate.
    """
    values = kernel.values
    if not values.sum() > 0:
        raise NumericalContractError("kernel has zero total mass")
    n = kernel.grid.count * max(1, int(pad_factor))
    spec = np.abs(np.fft.rfft(values, n=n))
    freqs = np.fft.rfftfreq(n, d=kernel.grid.step)
    return MtfCurve(freqs, spec / spec[0], kernel.axis_kind)


def resolution_at_contrast(curve: MtfCurve, threshold: float = 0.30) -> float:
    """Lowest frequency at which the contrast first falls to ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ValidationError("threshold must lie strictly between 0 and 1")
    c, f = curve.contrast, curve.frequencies
    below = np.nonzero(c <= threshold)[0]
    if below.size == 0:
        raise NumericalContractError(
            f"MTF never reaches {threshold:g}: max frequency {f[-1]:.6g}, "
            f"min contrast {c.min():.6g}"
        )
    i = below[0]
    if i == 0:
        return float(f[0])
    t = (c[i - 1] - threshold) / (c[i - 1] - c[i])
    return float(f[i - 1] + t * (f[i] - f[i - 1]))


@dataclass(frozen=True)
class MtfRow:
    width: float
    spectral_res: float
    spatial_res: float
    threshold: float

    def csv_fields(self) -> tuple:
        return (self.width, self.spectral_res, self.spatial_res, self.threshold)


def mtf_tradeoff_sweep(
    kind: str,
    widths,
    system: OpticalSystem,
    wavelength: float,
    threshold: float = 0.30,
    window: float = DEFAULT_WINDOW,
) -> list[MtfRow]:
    rows = []
    for w in _check_widths(widths):
        ap = make_aperture(kind, w)
        spec = resolution_at_contrast(mtf(spectral_blur(ap, system)), threshold)
        spat = resolution_at_contrast(mtf(spatial_blur(ap, system, wavelength, window=window)), threshold)
        rows.append(MtfRow(w, spec, spat, threshold))
    return rows
