"""Qudit states in OAM subspaces, mutually unbiased bases and the optical channel
as seen by a prepare-and-measure link.

The channel is reduced to one transfer matrix per phase screen,
``T[l', l] = <ref_l' | channel(mode_l)>``, with the reference modes
propagated through the same medium without turbulence. The detection
amplitude between any sent state ``s`` and measured state ``m`` is then
``m^dagger T s``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .field import GridSpec, ModeSpec, apply_phase, make_mode
from .propagation import VACUUM, Medium, make_plan
from .zernike import PhaseScreen

TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise ValueError("a state vector is one-dimensional")
        if abs(np.linalg.norm(a) - 1) > TOL:
            raise ValueError("state vector must have unit norm")
        object.__setattr__(self, "amplitudes", a)

    @property
    def dimension(self) -> int:
        return len(self.amplitudes)


@dataclass(frozen=True, eq=False)
class Basis:
    """Orthonormal basis of a d-dimensional OAM subspace.

    ``vectors[k]`` holds the amplitudes of state k on the logical states
    ``|oam_labels[0]>, ..., |oam_labels[d-1]>``.
    """

    label: str
    oam_labels: tuple[int, ...]
    vectors: np.ndarray
    state_names: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        d = len(self.oam_labels)
        if v.shape != (d, d):
            raise ValueError(f"basis needs {d} vectors of length {d}")
        if len(set(self.oam_labels)) != d:
            raise ValueError("OAM labels must be distinct")
        if np.abs(v.conj() @ v.T - np.eye(d)).max() > TOL:
            raise ValueError("basis vectors are not orthonormal")
        names = self.state_names or tuple(f"{self.label}{k}" for k in range(d))
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "oam_labels", tuple(int(x) for x in self.oam_labels))
        object.__setattr__(self, "state_names", tuple(names))

    @property
    def dimension(self) -> int:
        return len(self.oam_labels)

    def state(self, k: int) -> StateVector:
        return StateVector(self.vectors[k])


# OAM subspaces used on the water link
DEFAULT_SUBSPACES = {2: (-1, 1), 3: (0, -1, 1), 4: (-2, -1, 1, 2)}


def default_labels(d: int) -> tuple[int, ...]:
    """OAM values spanning the d-dimensional subspace when none are given."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d in DEFAULT_SUBSPACES:
        return DEFAULT_SUBSPACES[d]
    half = d // 2
    return tuple(range(-half, d - half))


def _labels(d: int, oam_labels) -> tuple[int, ...]:
    labels = default_labels(d) if oam_labels is None else tuple(int(x) for x in oam_labels)
    if len(labels) != d:
        raise ValueError(f"need {d} OAM values, got {len(labels)}")
    if len(set(labels)) != d:
        raise ValueError(f"duplicate OAM value in {labels}")
    return labels


def mub_logical(d: int, oam_labels=None) -> Basis:
    """Computational basis ``{|l>}`` over the given OAM values, in the given order."""
    labels = _labels(d, oam_labels)
    names = tuple(f"|{l:+d}>" if l else "|0>" for l in labels)
    return Basis("logical", labels, np.eye(d), names)


def mub_fourier(d: int, oam_labels=None) -> Basis:
    """Discrete-Fourier basis: state j has amplitude ``w^(ij)/sqrt(d)`` on ``|l_i>``."""
    if d < 2:
        raise ValueError("the Fourier basis needs d >= 2")
    labels = _labels(d, oam_labels)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="xy")
    vectors = np.exp(2j * np.pi * i * j / d) / np.sqrt(d)
    names = ("|+>", "|->") if d == 2 else ()
    return Basis("fourier", labels, vectors, names)


def mub_circular(oam_labels=None) -> Basis:
    """Third qubit basis ``(|a> +- i|b>)/sqrt(2)``."""
    labels = _labels(2, oam_labels)
    vectors = np.array([[1, 1j], [1, -1j]]) / np.sqrt(2)
    return Basis("circular", labels, vectors, ("|+i>", "|-i>"))


def mutual_overlaps(a: Basis, b: Basis) -> np.ndarray:
    """``|<a_i|b_j>|^2`` for every pair."""
    return np.abs(a.vectors.conj() @ b.vectors.T) ** 2


@dataclass(frozen=True, eq=False)
class DetectionMatrix:
    """Row-stochastic ``P(measured j | sent i)``, post-selected on detection."""

    sent_basis: str
    measured_basis: str
    oam_labels: tuple[int, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        d = len(self.oam_labels)
        if p.shape != (d, d):
            raise ValueError(f"detection matrix must be {d}x{d}")
        if np.any(p < -1e-15) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if np.abs(p.sum(axis=1) - 1).max() > 1e-9:
            raise ValueError("each row of a detection matrix must sum to 1")
        object.__setattr__(self, "probabilities", np.clip(p, 0.0, 1.0))
        object.__setattr__(self, "oam_labels", tuple(int(x) for x in self.oam_labels))

    @property
    def dimension(self) -> int:
        return len(self.oam_labels)

    @property
    def same_basis(self) -> bool:
        return self.sent_basis == self.measured_basis

    def header(self) -> dict:
        return {"sent_basis": self.sent_basis, "measured_basis": self.measured_basis,
                "oam_labels": list(self.oam_labels), "d": self.dimension}

    def to_csv(self) -> str:
        """CSV whose first line is a ``#``-prefixed JSON header."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.header(), sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sent"] + [f"meas{k}" for k in range(self.dimension)])
        for k, row in enumerate(self.probabilities):
            writer.writerow([k] + [repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DetectionMatrix":
        first, rest = text.split("\n", 1)
        if not first.startswith("#"):
            raise ValueError("detection matrix CSV must start with a '#' JSON header")
        head = json.loads(first[1:])
        rows = list(csv.reader(io.StringIO(rest)))[1:]
        probs = np.array([[float(x) for x in r[1:]] for r in rows if r])
        return cls(head["sent_basis"], head["measured_basis"], tuple(head["oam_labels"]), probs)


@dataclass(frozen=True)
class SourceStats:
    singles_rate_signal: float
    singles_rate_idler: float
    coincidence_rate: float
    coincidence_window: float

    def __post_init__(self):
        if min(self.singles_rate_signal, self.singles_rate_idler, self.coincidence_rate,
               self.coincidence_window) < 0:
            raise ValueError("rates and window must be non-negative")


# heralded SPDC source on the pool link
POOL_SOURCE = SourceStats(5e6, 1.5e6, 432e3, 5e-9)


def accidental_rate(stats: SourceStats) -> float:
    """Uncorrelated coincidences per second, ``S_signal * S_idler * window``."""
    return stats.singles_rate_signal * stats.singles_rate_idler * stats.coincidence_window


@dataclass(frozen=True, eq=False)
class Channel:
    """Single-phase-screen optical link.

    ``screens`` is the turbulence ensemble; an empty tuple is a
    turbulence-free link.
    """

    grid: GridSpec
    waist: float
    distance: float = 0.0
    medium: Medium = VACUUM
    profile: str = "helical-gaussian"
    screens: tuple[PhaseScreen, ...] = field(default=())

    def mode(self, ell: int):
        return make_mode(ModeSpec(ell, self.waist, self.profile), self.grid)


def transfer_matrices(channel: Channel, oam_labels) -> np.ndarray:
    """``(n_screens, d, d)`` array of ``<ref_l'|channel(mode_l)>`` amplitudes."""
    labels = tuple(oam_labels)
    plan = make_plan(channel.grid, channel.distance, channel.medium)
    modes = [channel.mode(l) for l in labels]
    refs = np.stack([plan.apply(m).amplitudes.ravel() for m in modes])
    pitch2 = channel.grid.pitch ** 2
    screens = channel.screens or (None,)
    out = np.empty((len(screens), len(labels), len(labels)), dtype=complex)
    for s, screen in enumerate(screens):
        sent = modes if screen is None else [apply_phase(m, screen) for m in modes]
        received = np.stack([plan.apply(m).amplitudes.ravel() for m in sent])
        out[s] = refs.conj() @ received.T * pitch2
    return out


def detection_from_transfer(transfers: np.ndarray, sent: Basis, measured: Basis) -> DetectionMatrix:
    """Ensemble-averaged, post-selected detection probabilities."""
    if sent.oam_labels != measured.oam_labels:
        raise ValueError("sent and measured bases must share OAM labels")
    amps = np.einsum("mi,sij,nj->snm", measured.vectors.conj(), transfers, sent.vectors)
    counts = np.sum(np.abs(amps) ** 2, axis=0)
    totals = counts.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise ValueError("a sent state is never detected through this channel")
    return DetectionMatrix(sent.label, measured.label, sent.oam_labels, counts / totals)


def simulate_detection(sent: Basis, measured: Basis, channel: Channel) -> DetectionMatrix:
    """Push every sent state through the channel and project on the measured basis.

    Unnormalized detection probabilities are averaged over the screen
    ensemble before each row is renormalized, as accumulated coincidence
    counts would be.
    """
    if sent.oam_labels != measured.oam_labels:
        raise ValueError("sent and measured bases must share OAM labels")
    return detection_from_transfer(transfer_matrices(channel, sent.oam_labels), sent, measured)


def sample_counts(m: DetectionMatrix, shots_per_state: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts, one row of ``shots_per_state`` trials per sent state."""
    if shots_per_state < 1:
        raise ValueError("shots_per_state must be >= 1")
    p = m.probabilities / m.probabilities.sum(axis=1, keepdims=True)
    return np.stack([rng.multinomial(shots_per_state, row) for row in p])
