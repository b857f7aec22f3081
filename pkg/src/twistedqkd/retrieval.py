"""Gerchberg-Saxton phase retrieval of a single input-plane phase screen.

The channel is modelled as an unknown phase screen right at the input,
followed by homogeneous propagation. Given the known input amplitude and the
intensity recorded after the link, alternating projections between the two
planes recover the screen.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .field import SampledField
from .propagation import VACUUM, Medium, make_plan
from .vortex import plaquette_charges
from .zernike import PhaseScreen, ZernikeSpectrum, decompose

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GsaOptions:
    max_iterations: int = 40
    convergence_tolerance: float = 1e-5
    initial_phase: str = "zeros"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tolerance > 0:
            raise ValueError("convergence_tolerance must be positive")
        if self.initial_phase not in ("zeros", "random"):
            raise ValueError("initial_phase must be 'zeros' or 'random'")


@dataclass(frozen=True, eq=False)
class RetrievalResult:
    screen: PhaseScreen
    residual: float
    converged: bool
    iterations: int
    errors: np.ndarray = field(repr=False)
    residues: int = 0


_TINY = np.finfo(float).tiny


def _gauge_fix(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Rotate out the weighted mean phase, then take the angle."""
    mean = np.sum(weights * u)
    if abs(mean) > 0:
        u = u * np.conj(mean) / abs(mean)
    return np.angle(u)


def itoh_unwrap(phase: np.ndarray) -> np.ndarray:
    """Row-then-column Itoh unwrapping from the central row and column."""
    out = np.unwrap(phase, axis=1)
    c = out.shape[0] // 2
    offsets = np.unwrap(out[:, c]) - out[:, c]
    return out + offsets[:, None]


def gsa_retrieve(input_amplitude: SampledField, output_intensity: np.ndarray, distance: float,
                 medium: Medium = VACUUM, opts: GsaOptions = GsaOptions(), *,
                 aperture_radius: float | None = None, unwrap: bool = False) -> RetrievalResult:
    """Recover the input-plane phase that turns ``input_amplitude`` into ``output_intensity``.

    Each iteration forward-propagates, imposes the measured output modulus,
    back-propagates and imposes the known input modulus. ``residual`` is the
    normalized RMS modulus mismatch at the output plane,
    ``|| |G| - sqrt(I) || / || sqrt(I) ||``; it is recorded before every
    output projection, so ``errors`` is non-increasing. Stops when the
    relative change of the error drops below the tolerance; hitting
    ``max_iterations`` first returns the result with ``converged=False``.

    The phase is first rotated so its intensity-weighted mean vanishes (which
    keeps the bright region away from the wrap), then shifted so the mean
    phase inside the aperture is zero.
    """
    grid = input_amplitude.grid
    intensity = np.asarray(output_intensity, dtype=float)
    if intensity.shape != input_amplitude.amplitudes.shape:
        raise ValueError("output intensity grid does not match the input field grid")
    if np.any(intensity < 0) or not np.all(np.isfinite(intensity)):
        raise ValueError("output intensity must be finite and non-negative")
    radius = aperture_radius or grid.extent / 2

    # Error reduction is only guaranteed for a unitary propagator, so the loop
    # uses the full-band kernel; the intensity is rescaled to the lossless
    # power because absorption only changes the overall scale.
    unitary = make_plan(grid, distance, medium).unitary
    adjoint = np.conj(unitary)
    source = np.abs(input_amplitude.amplitudes)
    target = np.sqrt(intensity)
    target = target * np.sqrt(np.sum(source ** 2) / max(np.sum(intensity), np.finfo(float).tiny))
    norm = float(np.sqrt(np.sum(target ** 2))) or 1.0

    if opts.initial_phase == "random":
        phase = np.random.default_rng(opts.seed).uniform(-np.pi, np.pi, source.shape)
    else:
        phase = np.zeros_like(source)
    g = source * np.exp(1j * phase)

    errors = []
    converged = False
    for k in range(opts.max_iterations):
        out = sfft.ifft2(sfft.fft2(g) * unitary)
        modulus = np.abs(out)
        err = float(np.sqrt(np.sum((modulus - target) ** 2)) / norm)
        errors.append(err)
        if k and errors[-2] - err <= opts.convergence_tolerance * errors[-2]:
            converged = True
            break
        out *= target / np.maximum(modulus, _TINY)
        back = sfft.ifft2(sfft.fft2(out) * adjoint)
        g = back * (source / np.maximum(np.abs(back), _TINY))

    phase = _gauge_fix(g, source ** 2)
    residues = int(np.count_nonzero(plaquette_charges(g)[source[:-1, :-1] > 1e-3 * source.max()]))
    if unwrap:
        phase = itoh_unwrap(phase)
        if residues:
            log.warning("retrieved phase has %d residues; unwrapping is unreliable", residues)
    screen = PhaseScreen(grid.samples_per_side, grid.pitch, radius, phase)
    # piston convention: zero mean phase inside the aperture
    inside = screen.aperture_mask()
    screen = PhaseScreen(grid.samples_per_side, grid.pitch, radius, phase - phase[inside].mean())
    return RetrievalResult(screen, errors[-1], converged, len(errors), np.array(errors), residues)


def forward_intensity(input_field: SampledField, screen: PhaseScreen, distance: float,
                      medium: Medium = VACUUM) -> np.ndarray:
    """Intensity after a screen at the input plane and ``distance`` of propagation."""
    from .field import apply_phase

    return make_plan(input_field.grid, distance, medium).apply(apply_phase(input_field, screen)).intensity


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """Per-frame Zernike spectra and their per-index mean/std."""

    indices: np.ndarray
    coefficients: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    aperture_radius: float

    @property
    def mean(self) -> np.ndarray:
        return self.coefficients.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        ddof = 1 if len(self.coefficients) > 1 else 0
        # centering on frame 0 first makes identical frames give exactly 0
        return (self.coefficients - self.coefficients[0]).std(axis=0, ddof=ddof)

    def spectrum(self, frame: int) -> ZernikeSpectrum:
        return ZernikeSpectrum(tuple(zip(self.indices.tolist(), self.coefficients[frame].tolist())),
                               self.aperture_radius)


def characterize_frames(frames, input_amplitude: SampledField, distance: float,
                        medium: Medium = VACUUM, opts: GsaOptions = GsaOptions(), max_j: int = 10,
                        *, aperture_radius: float, threads: int = 1) -> EnsembleStats:
    """Retrieve and Zernike-decompose every frame; results are keyed by frame order.

    The fit is weighted by the input intensity, since the phase far outside
    the beam is unconstrained by the data.
    """
    frames = [np.asarray(f, dtype=float) for f in frames]
    if not frames:
        raise ValueError("at least one frame is required")
    shape = input_amplitude.amplitudes.shape
    for k, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(f"frame {k} has shape {f.shape}, expected {shape}")
    weights = np.abs(input_amplitude.amplitudes) ** 2

    def one(frame):
        result = gsa_retrieve(input_amplitude, frame, distance, medium, opts,
                              aperture_radius=aperture_radius)
        fit = decompose(result.screen, max_j, weights=weights)
        return ([a for _, a in fit.spectrum.entries], result.residual, result.converged)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, frames))
    else:
        results = [one(f) for f in frames]
    coeffs, residuals, converged = zip(*results)
    return EnsembleStats(np.arange(1, max_j + 1), np.array(coeffs), np.array(residuals),
                         np.array(converged), aperture_radius)


def read_frame(path, dark_level: float = 0.0, normalize: bool = True) -> np.ndarray:
    """Load an 8/16-bit grayscale PGM or PNG as float intensities."""
    from PIL import Image

    path = Path(path)
    with Image.open(path) as img:
        if img.mode not in ("L", "I;16", "I;16B", "I;16L", "I"):
            raise ValueError(f"{path}: expected a grayscale image, got mode {img.mode}")
        data = np.asarray(img, dtype=float)
    data = np.clip(data - dark_level, 0.0, None)
    if normalize:
        total = data.sum()
        if total <= 0:
            raise ValueError(f"{path}: frame is empty after dark subtraction")
        data = data / total
    return data


def write_frame(path, intensity: np.ndarray, bits: int = 16) -> None:
    """Quantize an intensity map to an 8/16-bit grayscale PGM/PNG (peak = full scale)."""
    from PIL import Image

    full = (1 << bits) - 1
    peak = intensity.max()
    scaled = np.rint(intensity / peak * full) if peak > 0 else np.zeros_like(intensity)
    if bits == 8:
        img = Image.fromarray(scaled.astype(np.uint8), mode="L")
    elif bits == 16:
        img = Image.fromarray(scaled.astype(np.uint16))
    else:
        raise ValueError("bits must be 8 or 16")
    img.save(path)
