"""Zernike polynomials on the unit disk, index bookkeeping and phase-map fitting.

Linear index ``j = 1 + (n(n+2) + m)/2``. The first terms are::

    j=1  (0, 0)  piston        j=4  (2,-2)  oblique astigmatism
    j=2  (1,-1)  tip (y)       j=5  (2, 0)  defocus
    j=3  (1, 1)  tilt (x)      j=6  (2, 2)  vertical astigmatism

Normalization is ``sqrt(n+1) R_n^m(r)`` for ``m = 0`` and
``sqrt(2(n+1)) R_n^|m|(r)`` times ``cos(m phi)`` for ``m > 0`` or
``sin(|m| phi)`` for ``m < 0``, which makes the set orthonormal under
``(1/pi) * integral over the disk``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path

import numpy as np

from ._io import atomic_write


@dataclass(frozen=True)
class ZernikeIndex:
    n: int
    m: int
    j: int

    def __post_init__(self):
        _check_nm(self.n, self.m)
        if nm_to_index(self.n, self.m) != self.j:
            raise ValueError(f"j={self.j} is inconsistent with (n={self.n}, m={self.m})")

    @classmethod
    def from_j(cls, j: int) -> "ZernikeIndex":
        n, m = index_to_nm(j)
        return cls(n, m, j)


@dataclass(frozen=True)
class ZernikeSpectrum:
    """Zernike coefficients in radians, keyed by linear index."""

    entries: tuple[tuple[int, float], ...]
    aperture_radius: float

    def __post_init__(self):
        entries = tuple((int(j), float(a)) for j, a in self.entries)
        js = [j for j, _ in entries]
        if len(set(js)) != len(js):
            raise ValueError("Zernike indices in a spectrum must be distinct")
        if any(j < 1 for j in js):
            raise ValueError("Zernike indices start at 1")
        if not self.aperture_radius > 0:
            raise ValueError("aperture_radius must be positive")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_dict(cls, coefficients: dict, aperture_radius: float) -> "ZernikeSpectrum":
        return cls(tuple(sorted(coefficients.items())), aperture_radius)

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)

    def coefficient(self, j: int) -> float:
        return self.as_dict().get(j, 0.0)

    def merged(self, other: "ZernikeSpectrum") -> "ZernikeSpectrum":
        if not np.isclose(self.aperture_radius, other.aperture_radius):
            raise ValueError("cannot merge spectra with different apertures")
        total = self.as_dict()
        for j, a in other.entries:
            total[j] = total.get(j, 0.0) + a
        return ZernikeSpectrum.from_dict(total, self.aperture_radius)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "n", "m", "a_j"])
        for j, a in sorted(self.entries):
            n, m = index_to_nm(j)
            writer.writerow([j, n, m, repr(a)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"aperture_radius": self.aperture_radius,
               "coefficients": [{"j": j, "n": index_to_nm(j)[0], "m": index_to_nm(j)[1], "a_j": a}
                                for j, a in sorted(self.entries)]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ZernikeSpectrum":
        doc = json.loads(text)
        return cls(tuple((c["j"], c["a_j"]) for c in doc["coefficients"]), doc["aperture_radius"])


@dataclass(frozen=True, eq=False)
class PhaseScreen:
    """Real phase map (radians) on a square grid with a circular aperture."""

    samples_per_side: int
    pitch: float
    aperture_radius: float
    phase: np.ndarray = field(repr=False)

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=float)
        n = self.samples_per_side
        if phase.shape != (n, n):
            raise ValueError(f"phase must have shape {(n, n)}, got {phase.shape}")
        if not np.all(np.isfinite(phase)):
            raise ValueError("phase screen must be finite everywhere")
        if not (self.pitch > 0 and self.aperture_radius > 0):
            raise ValueError("pitch and aperture_radius must be positive")
        object.__setattr__(self, "phase", phase)

    @classmethod
    def flat(cls, grid, aperture_radius: float) -> "PhaseScreen":
        n = grid.samples_per_side
        return cls(n, grid.pitch, aperture_radius, np.zeros((n, n)))

    def unit_disk_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        return _unit_polar(self.samples_per_side, self.pitch, self.aperture_radius)

    def aperture_mask(self) -> np.ndarray:
        r, _ = self.unit_disk_coordinates()
        return r <= 1.0

    def __add__(self, other: "PhaseScreen") -> "PhaseScreen":
        if (self.samples_per_side != other.samples_per_side
                or not np.isclose(self.pitch, other.pitch, rtol=1e-12, atol=0.0)):
            raise ValueError("cannot add screens with different geometry")
        return PhaseScreen(self.samples_per_side, self.pitch, self.aperture_radius,
                           self.phase + other.phase)

    def scaled(self, factor: float) -> "PhaseScreen":
        return PhaseScreen(self.samples_per_side, self.pitch, self.aperture_radius,
                           factor * self.phase)


def save_screen(screen: PhaseScreen, path) -> None:
    """Raw little-endian float64 phase (row-major) plus a ``path.json`` sidecar."""
    atomic_write(path, np.ascontiguousarray(screen.phase, dtype="<f8").tobytes())
    sidecar = {"kind": "phase-screen", "dtype": "<f8", "layout": "row-major",
               "samples_per_side": screen.samples_per_side, "pitch": screen.pitch,
               "aperture_radius": screen.aperture_radius}
    atomic_write(str(path) + ".json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_screen(path) -> PhaseScreen:
    meta = json.loads(Path(str(path) + ".json").read_text())
    n = meta["samples_per_side"]
    data = np.frombuffer(Path(path).read_bytes(), dtype="<f8")
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} float64 values, found {data.size}")
    return PhaseScreen(n, meta["pitch"], meta["aperture_radius"], data.reshape(n, n).copy())


def _check_nm(n: int, m: int) -> None:
    if n < 0 or abs(m) > n or (n - abs(m)) % 2:
        raise ValueError(f"invalid Zernike pair (n={n}, m={m}): need |m| <= n and n-|m| even")


def nm_to_index(n: int, m: int) -> int:
    _check_nm(n, m)
    return 1 + (n * (n + 2) + m) // 2


def index_to_nm(j: int) -> tuple[int, int]:
    if int(j) != j or j < 1:
        raise ValueError(f"Zernike index must be a positive integer, got {j}")
    j = int(j)
    # radial order n holds indices (n(n+1)/2, (n+1)(n+2)/2]
    n = int((np.sqrt(8 * j - 7) - 1) // 2)
    while n * (n + 1) // 2 >= j:
        n -= 1
    while (n + 1) * (n + 2) // 2 < j:
        n += 1
    m = 2 * (j - 1) - n * (n + 2)
    _check_nm(n, m)
    return n, m


def radial_poly(n: int, m: int, r):
    """``R_n^|m|(r)`` by the alternating factorial sum."""
    _check_nm(n, m)
    m = abs(m)
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for k in range((n - m) // 2 + 1):
        c = ((-1) ** k * factorial(n - k)
             / (factorial(k) * factorial((n + m) // 2 - k) * factorial((n - m) // 2 - k)))
        out = out + c * r ** (n - 2 * k)
    return out


def evaluate(j: int, r, phi):
    """``Z_j(r, phi)`` on the unit disk."""
    n, m = index_to_nm(j)
    radial = radial_poly(n, m, r)
    phi = np.asarray(phi, dtype=float)
    if m == 0:
        return np.sqrt(n + 1) * radial * np.ones_like(phi)
    angular = np.cos(m * phi) if m > 0 else np.sin(-m * phi)
    return np.sqrt(2 * (n + 1)) * radial * angular


def _unit_polar(samples: int, pitch: float, aperture_radius: float):
    axis = (np.arange(samples) - samples // 2) * pitch / aperture_radius
    x, y = np.meshgrid(axis, axis, indexing="xy")
    return np.hypot(x, y), np.arctan2(y, x)


def synthesize(spectrum: ZernikeSpectrum, grid) -> PhaseScreen:
    """Sum ``a_j Z_j`` inside the aperture; zero outside."""
    n = grid.samples_per_side
    r, phi = _unit_polar(n, grid.pitch, spectrum.aperture_radius)
    inside = r <= 1.0
    phase = np.zeros((n, n))
    for j, a in spectrum.entries:
        phase[inside] += a * evaluate(j, r[inside], phi[inside])
    return PhaseScreen(n, grid.pitch, spectrum.aperture_radius, phase)


@dataclass(frozen=True)
class ZernikeFit:
    spectrum: ZernikeSpectrum
    residual_rms: float


def decompose(screen: PhaseScreen, max_j: int, weights=None) -> ZernikeFit:
    """Least-squares fit of ``Z_1..Z_max_j`` to the in-aperture samples.

    ``weights`` (same shape as the screen) down-weights unreliable pixels.
    """
    if max_j < 1:
        raise ValueError("max_j must be >= 1")
    r, phi = screen.unit_disk_coordinates()
    inside = r <= 1.0
    if weights is not None:
        inside &= np.asarray(weights) > 0
    count = int(inside.sum())
    if count < max_j:
        raise ValueError(f"only {count} in-aperture samples for {max_j} coefficients")
    basis = np.stack([evaluate(j, r[inside], phi[inside]) for j in range(1, max_j + 1)], axis=1)
    target = screen.phase[inside]
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=float)[inside])
        coeffs, *_ = np.linalg.lstsq(basis * w[:, None], target * w, rcond=None)
    else:
        coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
    residual = target - basis @ coeffs
    spectrum = ZernikeSpectrum(tuple(zip(range(1, max_j + 1), coeffs.tolist())),
                               screen.aperture_radius)
    return ZernikeFit(spectrum, float(np.sqrt(np.mean(residual ** 2))))
