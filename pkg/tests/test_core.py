import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spectrobench.core import (
    Grid1D,
    NumericalContractError,
    OpticalSystem,
    SampledKernel,
    ValidationError,
    make_system,
    trapezoid,
    uncertainty_bound,
)


@pytest.mark.parametrize(
    "kwargs, word",
    [
        (dict(focal_length=0.0), "focal_length"),
        (dict(focal_length=-1.0), "focal_length"),
        (dict(groove_density=0.0), "groove_density"),
        (dict(wavelength_min=700e-9, wavelength_max=400e-9), "wavelength"),
        (dict(focal_length=math.nan), "focal_length"),
    ],
)
def test_system_validation_names_field(kwargs, word):
    base = dict(focal_length=0.075, groove_density=3e5, wavelength_min=400e-9, wavelength_max=700e-9)
    base.update(kwargs)
    with pytest.raises(ValidationError, match=word):
        OpticalSystem(**base)


def test_dispersion_and_range(system):
    assert system.f_nu0 == pytest.approx(22500.0)
    assert system.dispersion(500e-9) == pytest.approx(0.01125)
    with pytest.raises(ValidationError):
        system.check_wavelength(800e-9)


def test_bound_reference_values(system):
    # lambda / (4 pi nu0) by hand: 500e-9 / (4 pi 3e5) and 550e-9 / (4 pi 3e5)
    assert uncertainty_bound(system, 500e-9) == pytest.approx(1.3262911924324613e-13, rel=1e-12)
    assert uncertainty_bound(system, 550e-9) == pytest.approx(1.4589203116757075e-13, rel=1e-12)


@given(st.floats(0.01, 1.0))
def test_bound_focal_invariance_bitwise(f):
    a = uncertainty_bound(OpticalSystem(f, 3e5, 400e-9, 700e-9), 550e-9)
    b = uncertainty_bound(OpticalSystem(0.075, 3e5, 400e-9, 700e-9), 550e-9)
    assert a == b


@given(st.floats(1e4, 2e6))
def test_bound_halves_when_grooves_double(nu0):
    a = uncertainty_bound(OpticalSystem(0.075, nu0, 400e-9, 700e-9), 500e-9)
    b = uncertainty_bound(OpticalSystem(0.075, 2 * nu0, 400e-9, 700e-9), 500e-9)
    assert b == a / 2


def test_make_system_matches_constructor():
    assert make_system(0.05, 6e5, 400e-9, 700e-9) == OpticalSystem(0.05, 6e5, 400e-9, 700e-9)


def test_grid_coordinates_exact_and_symmetric():
    g = Grid1D.symmetric(1e-3, 2001)
    assert g.coordinate(1000) == 0.0
    assert g.coords[0] == pytest.approx(-1e-3)
    assert g.stop == pytest.approx(1e-3)
    assert all(g.coordinate(i) == g.coordinate(i) for i in range(0, 2001, 97))
    np.testing.assert_array_equal(g.coords, g.coords)


def test_fft_centered_grid_has_zero_at_half():
    g = Grid1D.fft_centered(0.5, 8)
    assert g.coords[4] == 0.0
    assert g.start == -2.0
    with pytest.raises(ValidationError):
        Grid1D.fft_centered(0.5, 7)


@pytest.mark.parametrize("step, count", [(0.0, 10), (-1.0, 10), (1.0, 1)])
def test_grid_rejects_bad_shape(step, count):
    with pytest.raises(ValidationError):
        Grid1D(0.0, step, count)


def test_trapezoid_matches_closed_form():
    g = Grid1D.symmetric(1.0, 1001)
    assert trapezoid(g.coords**2, g) == pytest.approx(2.0 / 3.0, rel=1e-5)


def test_sampled_kernel_contract():
    g = Grid1D.symmetric(1.0, 11)
    with pytest.raises(ValidationError):
        SampledKernel(g, -np.ones(11))
    with pytest.raises(ValidationError):
        SampledKernel(g, np.full(11, np.nan))
    with pytest.raises(NumericalContractError):
        SampledKernel(g, np.zeros(11))
    k = SampledKernel(g, np.ones(11))
    assert k.mass() == pytest.approx(2.0)
    with pytest.raises(ValueError):
        k.values[0] = 3.0
