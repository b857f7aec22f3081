import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistedqkd.field import (GridSpec, ModeSpec, SampledField, apply_phase, load_field, make_mode,
                              overlap, save_field, superpose)
from twistedqkd.zernike import PhaseScreen, ZernikeSpectrum, synthesize

from conftest import WAIST, WAVELENGTH


def _screen(grid, phase):
    return PhaseScreen(grid.samples_per_side, grid.pitch, 3 * WAIST, phase)


@pytest.mark.parametrize("kwargs", [
    dict(samples_per_side=15, pitch=1e-5, wavelength=1e-6),
    dict(samples_per_side=8, pitch=1e-5, wavelength=1e-6),
    dict(samples_per_side=64, pitch=0.0, wavelength=1e-6),
    dict(samples_per_side=64, pitch=1e-5, wavelength=-1.0),
])
def test_gridspec_rejects_bad_geometry(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_grid_center_is_origin(grid128):
    x, y = grid128.coordinates()
    assert x[64, 64] == 0 and y[64, 64] == 0
    assert x[64, 65] > 0 and y[65, 64] > 0
    assert grid128.extent == pytest.approx(16 * WAIST)


def test_gaussian_peaks_on_axis(grid256):
    f = make_mode(ModeSpec(0, WAIST), grid256)
    assert f.intensity[128, 128] == f.intensity.max()


@pytest.mark.parametrize("ell", [2, -2, 3])
def test_vortex_core_is_dark(grid256, ell):
    f = make_mode(ModeSpec(ell, WAIST), grid256)
    assert f.intensity[128, 128] <= np.finfo(float).eps * f.intensity.max()


def test_normalization_512():
    grid = GridSpec.for_waist(WAIST, WAVELENGTH, samples_per_side=512)
    for profile in ("helical-gaussian", "laguerre-gauss-p0"):
        for ell in range(-5, 6):
            f = make_mode(ModeSpec(ell, WAIST, profile), grid)
            assert abs(overlap(f, f) - 1) < 1e-9


@pytest.mark.parametrize("profile", ["helical-gaussian", "laguerre-gauss-p0"])
def test_distinct_modes_are_orthogonal(grid256, profile):
    modes = {l: make_mode(ModeSpec(l, WAIST, profile), grid256) for l in range(-5, 6)}
    worst = max(abs(overlap(modes[a], modes[b])) for a in modes for b in modes if a < b)
    assert worst < 1e-6


def test_named_overlaps(grid256):
    m = {l: make_mode(ModeSpec(l, WAIST), grid256) for l in (1, 2, 3, -3)}
    assert abs(overlap(m[1], m[2])) < 1e-6
    assert abs(overlap(m[-3], m[3])) < 1e-6


@pytest.mark.parametrize("ell", [-3, -1, 1, 2, 4])
def test_phase_winds_ell_times(grid256, ell):
    f = make_mode(ModeSpec(ell, WAIST), grid256)
    t = np.linspace(0, 2 * np.pi, 721)
    r = WAIST / grid256.pitch
    cols = np.rint(128 + r * np.cos(t)).astype(int)
    rows = np.rint(128 + r * np.sin(t)).astype(int)
    phase = np.unwrap(f.phase[rows, cols])
    assert round((phase[-1] - phase[0]) / (2 * np.pi)) == ell


def test_laguerre_profile_grows_as_r_power(grid256):
    f = make_mode(ModeSpec(2, WAIST, "laguerre-gauss-p0"), grid256)
    k = np.arange(1, 5)
    rho = k * grid256.pitch / WAIST
    ratio = np.abs(f.amplitudes[128, 128 + k]) / (rho ** 2 * np.exp(-rho ** 2))
    assert np.allclose(ratio, ratio[0], rtol=1e-12)


def test_aliasing_bound(grid128):
    make_mode(ModeSpec(16, WAIST), grid128)
    with pytest.raises(ValueError, match="aliasing"):
        make_mode(ModeSpec(17, WAIST), grid128)


@pytest.mark.parametrize("kwargs", [dict(oam_index=1, waist=0.0),
                                    dict(oam_index=1, waist=1e-3, profile="bessel"),
                                    dict(oam_index=1.5, waist=1e-3)])
def test_modespec_validation(kwargs):
    with pytest.raises(ValueError):
        ModeSpec(**kwargs)


def _random_field(grid, seed):
    r = np.random.default_rng(seed)
    n = grid.samples_per_side
    return SampledField(grid, r.normal(size=(n, n)) + 1j * r.normal(size=(n, n)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2 ** 32 - 1))
def test_overlap_conjugate_symmetry(s1, s2):
    grid = GridSpec(16, 1e-5, 1e-6)
    f, g = _random_field(grid, s1), _random_field(grid, s2)
    assert overlap(f, g) == pytest.approx(np.conj(overlap(g, f)), rel=1e-12)
    fn = f.normalized()
    assert abs(overlap(fn, fn) - 1) < 1e-12


def test_overlap_rejects_mismatched_grids(grid128, grid256):
    with pytest.raises(ValueError):
        overlap(make_mode(ModeSpec(0, WAIST), grid128), make_mode(ModeSpec(0, WAIST), grid256))


def test_apply_zero_screen_is_identity(grid128):
    f = make_mode(ModeSpec(2, WAIST), grid128)
    g = apply_phase(f, _screen(grid128, np.zeros((128, 128))))
    assert np.abs(g.amplitudes - f.amplitudes).max() <= 1e-15


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_apply_phase_is_phase_only_and_additive(seed):
    grid = GridSpec(32, 1e-4, WAVELENGTH)
    r = np.random.default_rng(seed)
    f = _random_field(grid, seed)
    s1 = PhaseScreen(32, 1e-4, 1e-3, r.uniform(-10, 10, (32, 32)))
    s2 = PhaseScreen(32, 1e-4, 1e-3, r.uniform(-10, 10, (32, 32)))
    g = apply_phase(f, s1)
    assert np.abs(np.abs(g.amplitudes) - np.abs(f.amplitudes)).max() <= 1e-12
    assert abs(g.power() - f.power()) <= 1e-12 * f.power()
    both = apply_phase(g, s2).amplitudes
    once = apply_phase(f, s1 + s2).amplitudes
    assert np.abs(both - once).max() <= 1e-12 * np.abs(f.amplitudes).max()


def test_apply_phase_geometry_mismatch(grid128):
    f = make_mode(ModeSpec(0, WAIST), grid128)
    with pytest.raises(ValueError):
        apply_phase(f, PhaseScreen(64, grid128.pitch, WAIST, np.zeros((64, 64))))


def test_superpose(grid128):
    a, b = (make_mode(ModeSpec(l, WAIST), grid128) for l in (-1, 1))
    s = superpose([a, b], [1 / np.sqrt(2), 1j / np.sqrt(2)])
    assert abs(overlap(s, s) - 1) < 1e-9
    assert abs(overlap(a, s) - 1 / np.sqrt(2)) < 1e-9


def test_field_round_trip(tmp_path, grid128):
    f = apply_phase(make_mode(ModeSpec(3, WAIST), grid128),
                    synthesize(ZernikeSpectrum(((4, 0.3),), 3 * WAIST), grid128))
    path = tmp_path / "f.f64"
    save_field(f, path)
    assert path.stat().st_size == 128 * 128 * 16
    g = load_field(path)
    assert g.grid == f.grid
    assert np.array_equal(g.amplitudes, f.amplitudes)
