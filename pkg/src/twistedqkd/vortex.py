"""Phase-singularity detection on sampled fields and frame-to-frame tracking."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter

from .field import SampledField

DEFAULT_FLOOR = 1e-4
# samples this far below the peak amplitude carry no usable phase
NULL_AMPLITUDE = 1e-12


@dataclass(frozen=True)
class Vortex:
    x: float
    y: float
    charge: int

    def __post_init__(self):
        if self.charge == 0:
            raise ValueError("a vortex must carry nonzero charge")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class VortexTrack:
    track_id: int
    charge: int
    frames: list[int] = field(default_factory=list)
    positions: list[tuple[float, float]] = field(default_factory=list)

    def append(self, frame: int, position: tuple[float, float]) -> None:
        if self.frames and frame <= self.frames[-1]:
            raise ValueError("track frame indices must be strictly increasing")
        self.frames.append(frame)
        self.positions.append(position)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def last_position(self) -> tuple[float, float]:
        return self.positions[-1]


def _wrapped(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # arg(v/u) in (-pi, pi]; antisymmetric in (u, v) and zero when either vanishes
    return np.angle(v * np.conj(u))


def plaquette_charges(a: np.ndarray) -> np.ndarray:
    """Winding number around every 2x2 plaquette, counter-clockwise in (x, y)."""
    circulation = (_wrapped(a[:-1, :-1], a[:-1, 1:]) + _wrapped(a[:-1, 1:], a[1:, 1:])
                   + _wrapped(a[1:, 1:], a[1:, :-1]) + _wrapped(a[1:, :-1], a[:-1, :-1]))
    return np.rint(circulation / (2 * np.pi)).astype(int)


# (row, col) offsets of the eight neighbours, counter-clockwise in (x, y)
_RING = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def _ring_charge(a: np.ndarray, i: int, j: int) -> int:
    ring = [a[i + di, j + dj] for di, dj in _RING]
    total = sum(np.angle(ring[(k + 1) % 8] * np.conj(ring[k])) for k in range(8))
    return int(np.rint(total / (2 * np.pi)))


def detect(f: SampledField, intensity_floor: float = DEFAULT_FLOOR,
           neighborhood: int | None = None) -> list[Vortex]:
    """Locate phase singularities by plaquette phase circulation.

    A plaquette is kept when some sample within ``neighborhood`` pixels
    (default ``N/16``) reaches ``intensity_floor`` times the peak intensity,
    so dark vortex cores inside the beam survive while the numerically dark
    surroundings are ignored. Charges above one are reported as co-located
    unit charges. Samples whose amplitude is exactly null (e.g. the axis of
    a freshly generated mode) are handled by the circulation around their
    eight neighbours and reported at the sample itself.
    """
    if not 0 <= intensity_floor < 1:
        raise ValueError("intensity_floor must lie in [0, 1)")
    a = f.amplitudes
    n = a.shape[0]
    intensity = np.abs(a) ** 2
    peak = intensity.max()
    if peak == 0:
        return []
    size = neighborhood or max(3, n // 16)
    bright = maximum_filter(intensity, size=size, mode="nearest") >= intensity_floor * peak
    charges = plaquette_charges(a)
    keep = bright[:-1, :-1] & bright[:-1, 1:] & bright[1:, :-1] & bright[1:, 1:]
    charges = np.where(keep, charges, 0)

    sites: list[tuple[float, float, int]] = []
    null = np.abs(a) <= NULL_AMPLITUDE * np.sqrt(peak)
    null[[0, -1], :] = False
    null[:, [0, -1]] = False
    for i, j in zip(*np.nonzero(null & bright)):
        if null[i - 1:i + 2, j - 1:j + 2].sum() > 1:
            continue
        charges[i - 1:i + 1, j - 1:j + 1] = 0
        q = _ring_charge(a, i, j)
        if q:
            sites.append((float(j), float(i), q))
    for i, j in zip(*np.nonzero(charges)):
        sites.append((j + 0.5, i + 0.5, int(charges[i, j])))

    pitch, c = f.grid.pitch, n // 2
    vortices = []
    for col, row, q in sorted(sites, key=lambda s: (s[1], s[0])):
        unit = 1 if q > 0 else -1
        vortices.extend(Vortex((col - c) * pitch, (row - c) * pitch, unit) for _ in range(abs(q)))
    return vortices


def total_charge(vortices) -> int:
    return sum(v.charge for v in vortices)


def max_separation(vortices) -> float:
    pts = np.array([v.position for v in vortices], dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def track(per_frame_vortices, max_step: float) -> list[VortexTrack]:
    """Greedy nearest-neighbour linking of same-charge vortices across frames.

    Within a frame, candidate (track, vortex) pairs are linked in order of
    increasing distance; a vortex left without a partner within ``max_step``
    opens a new track. A track that misses a frame is closed.
    """
    if not max_step > 0:
        raise ValueError("max_step must be positive")
    tracks: list[VortexTrack] = []
    active: list[VortexTrack] = []
    for frame, vortices in enumerate(per_frame_vortices):
        pairs = []
        for ti, t in enumerate(active):
            tx, ty = t.last_position
            for vi, v in enumerate(vortices):
                if v.charge == t.charge:
                    d = np.hypot(v.x - tx, v.y - ty)
                    if d <= max_step:
                        pairs.append((d, ti, vi))
        pairs.sort()
        used_t, used_v = set(), set()
        next_active = []
        for d, ti, vi in pairs:
            if ti in used_t or vi in used_v:
                continue
            used_t.add(ti)
            used_v.add(vi)
            active[ti].append(frame, vortices[vi].position)
            next_active.append(active[ti])
        for vi, v in enumerate(vortices):
            if vi not in used_v:
                t = VortexTrack(len(tracks), v.charge)
                t.append(frame, v.position)
                tracks.append(t)
                next_active.append(t)
        active = next_active
    return tracks


def tracks_to_csv(tracks) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["track_id", "frame", "x", "y", "charge"])
    for t in tracks:
        for frame, (x, y) in zip(t.frames, t.positions):
            writer.writerow([t.track_id, frame, repr(x), repr(y), t.charge])
    return buf.getvalue()


def detections_to_csv(per_frame_vortices) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "x", "y", "charge"])
    for frame, vortices in enumerate(per_frame_vortices):
        for v in vortices:
            writer.writerow([frame, repr(v.x), repr(v.y), v.charge])
    return buf.getvalue()
