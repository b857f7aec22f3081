import numpy as np
import pytest

from twistedqkd.field import GridSpec, ModeSpec, make_mode, overlap
from twistedqkd.propagation import (VACUUM, Medium, SamplingError, make_plan, propagate,
                                    second_moment_radius, water)

from conftest import WAIST, WAVELENGTH


@pytest.fixture(scope="module")
def grid():
    return GridSpec.for_waist(WAIST, WAVELENGTH, samples_per_side=256)


def test_zero_distance_is_identity(grid):
    f = make_mode(ModeSpec(3, WAIST), grid)
    assert np.abs(propagate(f, 0.0, VACUUM).amplitudes - f.amplitudes).max() < 1e-12
    assert np.abs(propagate(f, 0.0, water(0.0)).amplitudes - f.amplitudes).max() < 1e-12


@pytest.mark.parametrize("z,medium", [(1.0, VACUUM), (3.0, water(0.0)), (5.0, water(0.0)),
                                      (10.0, VACUUM)])
def test_gaussian_waist_growth(grid, z, medium):
    f = make_mode(ModeSpec(0, WAIST), grid)
    z_r = np.pi * WAIST ** 2 * medium.refractive_index / WAVELENGTH
    expected = WAIST * np.sqrt(1 + (z / z_r) ** 2)
    got = second_moment_radius(propagate(f, z, medium))
    assert got == pytest.approx(expected, rel=5e-3)


def test_power_conservation_and_beer_lambert(grid):
    f = make_mode(ModeSpec(2, WAIST), grid)
    assert propagate(f, 3.0, water(0.0)).power() == pytest.approx(1.0, abs=1e-9)
    alpha = 0.4
    assert propagate(f, 3.0, water(alpha)).power() == pytest.approx(np.exp(-alpha * 3.0), abs=1e-6)


@pytest.mark.parametrize("spec", [ModeSpec(0, WAIST), ModeSpec(1, WAIST, "laguerre-gauss-p0"),
                                  ModeSpec(-3, WAIST, "laguerre-gauss-p0")])
def test_composition(grid, spec):
    f = make_mode(spec, grid)
    m = water(0.1)
    two = propagate(propagate(f, 1.2, m), 1.8, m)
    one = propagate(f, 3.0, m)
    assert np.abs(two.amplitudes - one.amplitudes).max() < 1e-9


def test_full_band_kernel_composes_for_any_field(grid):
    # the band limit of a shorter hop is wider, so only the lossless full-band
    # kernel is an exact semigroup for fields with content near the band edge
    f = make_mode(ModeSpec(2, WAIST), grid).amplitudes
    p1, p2, p3 = (make_plan(grid, z, water(0.0)) for z in (1.2, 1.8, 3.0))
    spectrum = np.fft.fft2(f)
    two = np.fft.ifft2(spectrum * p1.unitary * p2.unitary)
    one = np.fft.ifft2(spectrum * p3.unitary)
    assert np.abs(two - one).max() < 1e-9


@pytest.mark.parametrize("ell", [-2, 1, 3])
def test_free_propagation_keeps_oam(grid, ell):
    out = propagate(make_mode(ModeSpec(ell, WAIST), grid), 3.0, water(0.0))
    for other in range(-5, 6):
        if other != ell:
            assert abs(overlap(make_mode(ModeSpec(other, WAIST), grid), out)) < 1e-4


def test_coarse_grid_is_rejected():
    # a 10-pitch waist on a 64 grid cannot go 200 m without wrapping
    grid = GridSpec(64, 1e-4, WAVELENGTH)
    f = make_mode(ModeSpec(0, 4e-4), grid)
    with pytest.raises(SamplingError, match="enlarge the grid"):
        propagate(f, 200.0)
    # the check can be relaxed explicitly
    propagate(f, 200.0, max_clipped=None)


def test_plan_is_shared_and_read_only(grid):
    p1 = make_plan(grid, 3.0, water(0.0))
    p2 = make_plan(grid, 3.0, water(0.0))
    assert p1.transfer is p2.transfer
    with pytest.raises(ValueError):
        p1.transfer[0, 0] = 0
    assert np.allclose(np.abs(p1.unitary), 1.0)


def test_plan_rejects_other_grids(grid):
    plan = make_plan(grid, 1.0)
    other = GridSpec.for_waist(WAIST, WAVELENGTH, samples_per_side=128)
    with pytest.raises(ValueError):
        plan.apply(make_mode(ModeSpec(0, WAIST), other))


@pytest.mark.parametrize("kwargs", [dict(refractive_index=0.9), dict(absorption_coefficient=-1)])
def test_medium_validation(kwargs):
    with pytest.raises(ValueError):
        Medium(**kwargs)


def test_negative_distance(grid):
    with pytest.raises(ValueError):
        propagate(make_mode(ModeSpec(0, WAIST), grid), -1.0)
