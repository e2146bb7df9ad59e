import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from spectrobench.analytic_blur import (
    default_spatial_grid,
    gaussian_sigma_lambda,
    gaussian_sigma_x,
    kernel_std,
    make_aperture,
    reciprocal_fit,
    spatial_blur,
    spectral_blur,
    tradeoff_sweep,
    uncertainty_product,
)
from spectrobench.aperture import Gaussian, Slit, scale
from spectrobench.core import Grid1D, NumericalContractError, OpticalSystem, ValidationError


def slit_sigma_x_quad(w, lam, f, window):
    """Second moment of W^2 sinc^2(W x / lambda f) over [-window, window] by adaptive quadrature."""
    u = lambda x: w * x / (lam * f)
    zeros = [k * lam * f / w for k in range(1, int(window * w / (lam * f)) + 1)]
    pts = sorted([-z for z in zeros] + zeros)
    num = integrate.quad(lambda x: x * x * np.sinc(u(x)) ** 2, -window, window, points=pts, limit=2000)[0]
    den = integrate.quad(lambda x: np.sinc(u(x)) ** 2, -window, window, points=pts, limit=2000)[0]
    return math.sqrt(num / den)


def test_gaussian_reference_numbers(system):
    # sigma / (sqrt(2) f nu0) and lambda f / (2 sqrt(2) pi sigma) evaluated by hand
    rep = uncertainty_product(Gaussian(500e-6), system, 500e-9)
    assert rep.sigma_lambda == pytest.approx(1.5713484026367e-08, rel=1e-6)
    assert rep.sigma_x == pytest.approx(8.4404654639e-06, rel=1e-6)
    assert rep.product == pytest.approx(1.3262911924e-13, rel=1e-6)
    assert rep.ratio == pytest.approx(1.0, abs=1e-9)


def test_closed_forms_match_numerics(system):
    g = Gaussian(250e-6)
    assert kernel_std(spectral_blur(g, system)) == pytest.approx(gaussian_sigma_lambda(250e-6, system), rel=1e-9)
    assert kernel_std(spatial_blur(g, system, 600e-9)) == pytest.approx(gaussian_sigma_x(250e-6, system, 600e-9), rel=1e-9)


@pytest.mark.parametrize("w", [225e-6, 450e-6, 1e-3])
def test_slit_spectral_std_is_uniform_width(system, w):
    # uniform of width W / (f nu0): std = W / (sqrt(12) f nu0)
    assert kernel_std(spectral_blur(Slit(w), system)) == pytest.approx(w / (math.sqrt(12) * system.f_nu0), rel=1e-6)


@pytest.mark.parametrize("w", [100e-6, 450e-6, 2000e-6])
def test_slit_spatial_std_matches_quadrature(system, w):
    ref = slit_sigma_x_quad(w, 500e-9, system.focal_length, 1e-3)
    assert kernel_std(spatial_blur(Slit(w), system, 500e-9)) == pytest.approx(ref, rel=1e-4)


def test_slit_ratio_reference_values(system):
    # frozen from the quadrature oracle above
    ratios = {w: uncertainty_product(Slit(w), system, 500e-9).ratio for w in (100e-6, 450e-6, 2000e-6)}
    for w, r in ratios.items():
        ref = w / (math.sqrt(12) * system.f_nu0) * slit_sigma_x_quad(w, 500e-9, 0.075, 1e-3) / (500e-9 / (4 * math.pi * 3e5))
        assert r == pytest.approx(ref, rel=1e-4)
    assert 1.9 < ratios[100e-6] < 2.05
    assert 8.3 < ratios[2000e-6] < 8.6


def test_kernel_std_is_raw_moment():
    g = Grid1D.symmetric(10.0, 2001)
    from spectrobench.core import SampledKernel

    shifted = SampledKernel(g, np.exp(-((g.coords - 3.0) ** 2) / 2.0))
    # about zero, not about the mean: sqrt(1 + 9)
    assert kernel_std(shifted) == pytest.approx(math.sqrt(10.0), rel=1e-6)


def test_truncated_spectral_grid_raises(system):
    with pytest.raises(NumericalContractError, match="captures"):
        spectral_blur(Gaussian(500e-6), system, Grid1D.symmetric(5e-9, 101))


def test_truncated_window_raises(system):
    # sigma_x = 844 um, far wider than a 1 mm half-window can hold
    with pytest.raises(NumericalContractError):
        spatial_blur(Gaussian(5e-6), system, 500e-9)


def test_wavelength_outside_range(system):
    with pytest.raises(ValidationError):
        spatial_blur(Gaussian(5e-4), system, 900e-9)


def test_default_spatial_grid_resolves_gaussian(system):
    g = default_spatial_grid(Gaussian(2e-3), system, 450e-9, 1e-3)
    assert g.step <= gaussian_sigma_x(2e-3, system, 450e-9) / 16
    assert g.count % 2 == 1


@settings(max_examples=20, deadline=None)
@given(st.floats(100e-6, 2e-3), st.floats(0.05, 0.1), st.sampled_from([150e3, 300e3, 600e3]), st.floats(420e-9, 680e-9))
def test_gaussian_saturates_bound(sigma, f, nu0, lam):
    s = OpticalSystem(f, nu0, 400e-9, 700e-9)
    assert uncertainty_product(Gaussian(sigma), s, lam).ratio == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2.0))
def test_gaussian_product_scale_invariant(s_):
    s = OpticalSystem(0.075, 3e5, 400e-9, 700e-9)
    a = uncertainty_product(Gaussian(500e-6), s, 500e-9).product
    b = uncertainty_product(scale(Gaussian(500e-6), s_), s, 500e-9).product
    assert b == pytest.approx(a, rel=1e-6)


def test_slit_product_not_scale_invariant_in_finite_window(system):
    # the sinc^2 second moment is window limited, so wider slits sit further above the bound
    r = [uncertainty_product(Slit(w), system, 500e-9).ratio for w in (200e-6, 400e-6, 800e-6)]
    assert r[0] < r[1] < r[2]


def test_sweep_monotone_and_fit(system):
    rows = tradeoff_sweep("gaussian", [100e-6, 250e-6, 500e-6, 1e-3, 2e-3], system, 500e-9)
    sl = [r.report.sigma_lambda for r in rows]
    sx = [r.report.sigma_x for r in rows]
    assert all(np.diff(sl) > 0) and all(np.diff(sx) < 0)
    fit = reciprocal_fit(rows)
    assert fit.expected_slope == pytest.approx(4 * math.pi * 3e5 / 500e-9)
    assert fit.slope_error <= 1e-6
    assert fit.r_squared >= 0.999999


@pytest.mark.parametrize("widths", [[], [1e-4, 1e-4], [2e-4, 1e-4], [-1e-4, 1e-4]])
def test_sweep_rejects_bad_widths(system, widths):
    with pytest.raises(ValidationError):
        tradeoff_sweep("gaussian", widths, system, 500e-9)


def test_make_aperture_unknown():
    with pytest.raises(ValidationError):
        make_aperture("disk", 1e-3)
