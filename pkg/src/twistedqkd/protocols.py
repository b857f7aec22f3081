"""QBER, sifting and asymptotic secret-key rates for d-dimensional BB84 and the
six-state protocol."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .quantum import (Basis, Channel, DetectionMatrix, detection_from_transfer, mub_circular,
                      mub_fourier, mub_logical, sample_counts, transfer_matrices)

KINDS = ("bb84", "six-state")


def shannon_entropy(p: float) -> float:
    """Binary entropy in bits, with ``0 log 0 = 0``."""
    if not 0 <= p <= 1:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return entropy_of((p, 1 - p))


def entropy_of(dist) -> float:
    """Shannon entropy of a discrete distribution, in bits."""
    p = np.asarray(dist, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError("distribution must be non-negative and sum to 1")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _h_d(d: int, q: float) -> float:
    # entropy of "correct with 1-q, else uniform over the d-1 wrong symbols"
    if q == 0:
        return 0.0
    return float(-q * np.log2(q / (d - 1)) - (1 - q) * np.log2(1 - q)) if q < 1 \
        else float(np.log2(d - 1))


def bb84_rate(d: int, q: float) -> float:
    """``log2 d - 2 h_d(Q)`` bits per sifted photon; negative means no key."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if not 0 <= q < 1:
        raise ValueError(f"QBER must lie in [0, 1), got {q}")
    return float(np.log2(d)) - 2 * _h_d(d, q)


def six_state_rate(q: float) -> float:
    """Depolarizing-channel six-state rate ``1 - H(1 - 3Q/2, Q/2, Q/2, Q/2)``."""
    if not 0 <= q <= 2 / 3:
        raise ValueError(f"six-state QBER must lie in [0, 2/3], got {q}")
    return 1.0 - entropy_of((1 - 1.5 * q, q / 2, q / 2, q / 2))


@dataclass(frozen=True)
class ProtocolSpec:
    kind: str = "bb84"
    dimension: int = 2
    bases: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown protocol kind {self.kind!r}; expected one of {KINDS}")
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        bases = self.bases or (("logical", "fourier", "circular") if self.kind == "six-state"
                               else ("logical", "fourier"))
        if self.kind == "six-state" and (self.dimension != 2 or len(bases) != 3):
            raise ValueError("the six-state protocol needs d=2 and three bases")
        if self.kind == "bb84" and len(bases) != 2:
            raise ValueError("BB84 uses exactly two bases")
        if len(set(bases)) != len(bases):
            raise ValueError("bases must be distinct")
        object.__setattr__(self, "bases", tuple(bases))

    def rate(self, q: float) -> float:
        return six_state_rate(q) if self.kind == "six-state" else bb84_rate(self.dimension, q)

    def make_bases(self, oam_labels=None) -> list[Basis]:
        makers = {"logical": lambda: mub_logical(self.dimension, oam_labels),
                  "fourier": lambda: mub_fourier(self.dimension, oam_labels),
                  "circular": lambda: mub_circular(oam_labels)}
        unknown = set(self.bases) - set(makers)
        if unknown:
            raise ValueError(f"unknown basis name(s) {sorted(unknown)}")
        return [makers[b]() for b in self.bases]


def qber(matrices) -> float:
    """Mean of ``1 - P(correct)`` over bases and sent states, uniform priors."""
    matrices = list(matrices)
    if not matrices:
        raise ValueError("qber needs at least one detection matrix")
    errors = []
    for m in matrices:
        if not m.same_basis:
            raise ValueError(f"matrix {m.sent_basis}->{m.measured_basis} mixes bases")
        errors.append(1 - np.mean(np.diag(m.probabilities)))
    return float(np.clip(np.mean(errors), 0.0, 1.0))


def threshold(spec: ProtocolSpec, tol: float = 1e-6) -> float:
    """Smallest root of the rate formula on ``(0, (d-1)/d)``, by bisection."""
    lo, hi = 0.0, (spec.dimension - 1) / spec.dimension
    if spec.rate(hi) > 0:
        raise ValueError("rate never reaches zero on the QBER range")
    # the rates are decreasing below their first root, so a coarse scan
    # brackets it before bisection
    grid = np.linspace(lo, hi, 201)
    k = next(i for i, q in enumerate(grid) if spec.rate(q) <= 0)
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > tol / 4:
        mid = 0.5 * (lo + hi)
        if spec.rate(mid) > 0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def sift(alice_bases, bob_bases, outcomes=None):
    """Keep rounds with matching bases; returns ``(kept outcomes, sift_rate)``."""
    a = np.asarray(alice_bases)
    b = np.asarray(bob_bases)
    if a.shape != b.shape:
        raise ValueError("basis strings must have equal length")
    if len(a) == 0:
        raise ValueError("no rounds to sift")
    keep = a == b
    kept = None
    if outcomes is not None:
        o = np.asarray(outcomes)
        if len(o) != len(a):
            raise ValueError("outcomes must match the basis strings in length")
        kept = o[keep]
    return kept, float(keep.mean())


@dataclass(frozen=True)
class ProtocolReport:
    kind: str
    dimension: int
    qber: float
    qber_stderr: float
    sift_rate: float
    key_rate: float | None
    threshold: float
    abort: bool
    shots_per_state: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ProtocolReport":
        return cls(**json.loads(text))


def _empirical(m: DetectionMatrix, shots: int, rng) -> DetectionMatrix:
    counts = sample_counts(m, shots, rng)
    return DetectionMatrix(m.sent_basis, m.measured_basis, m.oam_labels, counts / shots)


def run_protocol(spec: ProtocolSpec, source, shots: int | None = None,
                 rng: np.random.Generator | None = None, oam_labels=None):
    """End-to-end analysis from a :class:`Channel` or from same-basis detection matrices.

    With ``shots`` set, every row is replaced by multinomial frequencies
    from ``shots`` trials and the QBER carries a binomial standard error;
    with ``shots=None`` the exact matrices are used. Returns the report and
    the matrices the QBER was computed from.
    """
    if isinstance(source, Channel):
        bases = spec.make_bases(oam_labels)
        transfers = transfer_matrices(source, bases[0].oam_labels)
        matrices = [detection_from_transfer(transfers, b, b) for b in bases]
    else:
        matrices = list(source)
        if len(matrices) != len(spec.bases):
            raise ValueError(f"{spec.kind} expects {len(spec.bases)} matrices, got {len(matrices)}")
        for m in matrices:
            if m.dimension != spec.dimension:
                raise ValueError(f"matrix dimension {m.dimension} != protocol dimension "
                                 f"{spec.dimension}")
    stderr = 0.0
    if shots is not None:
        if rng is None:
            raise ValueError("sampling needs an rng")
        matrices = [_empirical(m, shots, rng) for m in matrices]
        n = shots * spec.dimension * len(matrices)
    q = qber(matrices)
    if shots is not None:
        stderr = float(np.sqrt(q * (1 - q) / n))
    q_th = threshold(spec)
    abort = bool(q >= q_th)
    rate = None if abort else spec.rate(q)
    report = ProtocolReport(spec.kind, spec.dimension, q, stderr, 1 / len(spec.bases), rate, q_th,
                            abort, shots)
    return report, matrices


def matrices_with_qber(spec: ProtocolSpec, q: float, oam_labels=None) -> list[DetectionMatrix]:
    """Same-basis matrices with ``1 - q`` on the diagonal and errors spread uniformly."""
    d = spec.dimension
    p = np.full((d, d), q / (d - 1))
    np.fill_diagonal(p, 1 - q)
    return [DetectionMatrix(b.label, b.label, b.oam_labels, p) for b in spec.make_bases(oam_labels)]
