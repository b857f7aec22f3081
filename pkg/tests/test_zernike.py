import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss

from twistedqkd.field import GridSpec
from twistedqkd.zernike import (PhaseScreen, ZernikeIndex, ZernikeSpectrum, decompose, evaluate,
                                index_to_nm, load_screen, nm_to_index, radial_poly, save_screen,
                                synthesize)

R = 1e-3


@pytest.fixture(scope="module")
def grid():
    # aperture of radius R inscribed with margin
    return GridSpec(128, 2.5 * R / 128, 635e-9)


def test_low_order_radial_identities():
    r = np.linspace(0, 1, 11)
    assert np.allclose(radial_poly(1, 1, r), r)
    assert np.allclose(radial_poly(2, 0, r), 2 * r ** 2 - 1)
    assert np.allclose(radial_poly(4, 0, r), 6 * r ** 4 - 6 * r ** 2 + 1)


def test_radial_poly_is_one_at_edge():
    for n in range(9):
        for m in range(-n, n + 1, 2):
            assert radial_poly(n, m, 1.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n,m", [(2, 1), (1, 2), (-1, 1), (3, 0)])
def test_invalid_pairs(n, m):
    with pytest.raises(ValueError):
        radial_poly(n, m, 0.5)
    with pytest.raises(ValueError):
        nm_to_index(n, m)


def test_named_indices():
    assert index_to_nm(1) == (0, 0)
    assert index_to_nm(2) == (1, -1)
    assert index_to_nm(3) == (1, 1)
    assert index_to_nm(4) == (2, -2)
    assert index_to_nm(5) == (2, 0)
    assert index_to_nm(6) == (2, 2)
    assert ZernikeIndex.from_j(5) == ZernikeIndex(2, 0, 5)
    with pytest.raises(ValueError):
        ZernikeIndex(2, 0, 4)


def test_index_formula_bijection():
    seen = set()
    for j in range(1, 101):
        n, m = index_to_nm(j)
        assert j == 1 + (n * (n + 2) + m) // 2
        assert nm_to_index(n, m) == j
        seen.add((n, m))
    assert len(seen) == 100
    for bad in (0, -3, 2.5):
        with pytest.raises(ValueError):
            index_to_nm(bad)


def test_piston_and_astigmatism_shapes():
    phi = np.linspace(-np.pi, np.pi, 9)
    assert np.allclose(evaluate(1, 0.7, phi), 1.0)
    # j=4 is the oblique (sin 2phi) term, j=6 the vertical (cos 2phi) one
    assert np.allclose(evaluate(4, 1.0, phi), np.sqrt(6) * np.sin(2 * phi))
    assert np.allclose(evaluate(6, 1.0, phi), np.sqrt(6) * np.cos(2 * phi))
    assert np.allclose(evaluate(5, 0.0, phi), -np.sqrt(3))


def _polar_gram(jmax, nr=64, nphi=128):
    # Gauss-Legendre in r, uniform trapezoid in phi: exact for these polynomials
    x, w = leggauss(nr)
    r = 0.5 * (x + 1)
    wr = 0.5 * w * r
    phi = 2 * np.pi * np.arange(nphi) / nphi
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    weight = np.outer(wr, np.full(nphi, 2 * np.pi / nphi)) / np.pi
    z = np.stack([evaluate(j, rr, pp) for j in range(1, jmax + 1)])
    return np.einsum("aij,bij,ij->ab", z, z, weight)


def test_orthonormal_by_quadrature():
    assert np.abs(_polar_gram(36) - np.eye(36)).max() < 1e-12


def test_orthonormal_on_pixels_1024():
    grid = GridSpec(1024, 2 * R / 1024, 635e-9)
    screen = PhaseScreen.flat(grid, R)
    r, phi = screen.unit_disk_coordinates()
    inside = r <= 1
    z = np.stack([evaluate(j, r[inside], phi[inside]) for j in range(1, 16)])
    gram = z @ z.T * (grid.pitch / R) ** 2 / np.pi
    assert np.abs(gram - np.eye(15)).max() < 1e-3


def test_decompose_single_term(grid):
    fit = decompose(synthesize(ZernikeSpectrum(((4, 0.3),), R), grid), 15)
    a = fit.spectrum.as_dict()
    assert a[4] == pytest.approx(0.3, abs=1e-3)
    assert max(abs(v) for j, v in a.items() if j != 4) < 1e-3
    assert fit.residual_rms < 1e-9


def test_decompose_flat(grid):
    a = decompose(PhaseScreen.flat(grid, R), 10).spectrum.as_dict()
    assert max(abs(v) for v in a.values()) < 1e-9


def test_decompose_constant_is_piston(grid):
    a = decompose(synthesize(ZernikeSpectrum(((1, 2.0),), R), grid), 10).spectrum.as_dict()
    assert a[1] == pytest.approx(2.0, abs=1e-9)
    assert max(abs(v) for j, v in a.items() if j != 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_round_trip_random_spectra(coeffs):
    grid = GridSpec(96, 2.2 * R / 96, 635e-9)
    spec = ZernikeSpectrum(tuple(enumerate(coeffs, start=1)), R)
    fit = decompose(synthesize(spec, grid), 10)
    got = np.array([a for _, a in fit.spectrum.entries])
    assert np.abs(got - coeffs).max() < 1e-6


def test_weighted_decompose_ignores_zero_weight_pixels(grid):
    screen = synthesize(ZernikeSpectrum(((2, 0.2), (6, -0.4)), R), grid)
    r, _ = screen.unit_disk_coordinates()
    garbage = np.where(r > 0.6, 50.0, 0.0)
    dirty = PhaseScreen(screen.samples_per_side, screen.pitch, R, screen.phase + garbage)
    fit = decompose(dirty, 6, weights=(r <= 0.6).astype(float))
    assert fit.spectrum.coefficient(6) == pytest.approx(-0.4, abs=1e-9)


def test_decompose_needs_enough_pixels():
    grid = GridSpec(16, 1.0, 635e-9)
    with pytest.raises(ValueError, match="in-aperture"):
        decompose(PhaseScreen.flat(grid, 1.0), 10)


def test_synthesize_basics(grid):
    assert not synthesize(ZernikeSpectrum((), R), grid).phase.any()
    s = synthesize(ZernikeSpectrum(((1, 2.0),), R), grid)
    inside = s.aperture_mask()
    assert np.all(s.phase[inside] == 2.0) and np.all(s.phase[~inside] == 0.0)


def test_synthesize_is_linear(grid):
    s1 = ZernikeSpectrum(((2, 0.3), (4, -0.7)), R)
    s2 = ZernikeSpectrum(((4, 0.2), (9, 1.1)), R)
    lhs = (synthesize(s1, grid) + synthesize(s2, grid)).phase
    assert np.abs(lhs - synthesize(s1.merged(s2), grid).phase).max() < 1e-12


def test_spectrum_validation_and_io(tmp_path):
    with pytest.raises(ValueError):
        ZernikeSpectrum(((2, 0.1), (2, 0.3)), R)
    with pytest.raises(ValueError):
        ZernikeSpectrum(((0, 0.1),), R)
    s = ZernikeSpectrum(((6, -0.25), (2, 0.1)), R)
    assert ZernikeSpectrum.from_json(s.to_json()).as_dict() == s.as_dict()
    lines = s.to_csv().splitlines()
    assert lines[0] == "j,n,m,a_j"
    assert lines[1].startswith("2,1,-1,")


def test_screen_round_trip(tmp_path, grid):
    s = synthesize(ZernikeSpectrum(((4, 0.5),), R), grid)
    save_screen(s, tmp_path / "s.f64")
    t = load_screen(tmp_path / "s.f64")
    assert np.array_equal(s.phase, t.phase) and t.aperture_radius == R


def test_screen_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhaseScreen(16, 1.0, 4.0, np.full((16, 16), np.nan))
