"""Single-qubit state and process tomography by linear inversion.

Density matrices and process matrices are written in the qubit frame
``(|+1>, |-1>)``, so ``|+1>`` is ``diag(1, 0)`` and the Pauli operators act
in the usual way with ``sigma_z |+1> = |+1>``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .quantum import (Basis, Channel, detection_from_transfer, mub_circular, mub_fourier,
                      mub_logical, transfer_matrices)

log = logging.getLogger(__name__)

FRAME = (1, -1)
PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_NAMES = ("I", "X", "Y", "Z")


def qubit_bases(oam_labels=(-1, 1)) -> list[Basis]:
    """The three mutually unbiased qubit bases used by the six-state protocol."""
    return [mub_logical(2, oam_labels), mub_fourier(2, oam_labels), mub_circular(oam_labels)]


def frame_vectors(basis: Basis) -> np.ndarray:
    """Basis vectors re-expressed in the ``(|+1>, |-1>)`` frame."""
    labels = basis.oam_labels
    if sorted(labels) != sorted(FRAME):
        raise ValueError(f"qubit tomography works on the OAM pair {FRAME}, got {labels}")
    order = [labels.index(l) for l in FRAME]
    return basis.vectors[:, order]


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def state_tomography(freqs, bases=None) -> np.ndarray:
    """Density matrix from outcome frequencies in three mutually unbiased bases.

    ``freqs[b][k]`` is the frequency of state ``k`` of ``bases[b]``. With
    complete MUBs, ``rho = sum_{b,k} p_bk P_bk - I``, which equals
    ``(I + sum s_k sigma_k)/2`` for the Pauli eigenbases.
    """
    bases = qubit_bases() if bases is None else list(bases)
    freqs = [np.asarray(f, dtype=float) for f in freqs]
    if len(freqs) != len(bases) or len(bases) != 3:
        raise ValueError("state tomography needs frequencies in exactly three bases")
    rho = -np.eye(2, dtype=complex)
    for b, f in zip(bases, freqs):
        if f.shape != (2,) or np.any(f < 0) or abs(f.sum() - 1) > 1e-9:
            raise ValueError(f"frequencies for basis {b.label!r} must be two non-negative "
                             f"numbers summing to 1, got {f.tolist()}")
        for v, p in zip(frame_vectors(b), f):
            rho += p * projector(v)
    return rho


def fidelity(rho: np.ndarray, psi: np.ndarray) -> float:
    """``<psi|rho|psi>`` for a pure reference state."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(psi.conj() @ rho @ psi))


def _vec(a: np.ndarray) -> np.ndarray:
    # column stacking, so vec(A X B) = (B^T kron A) vec(X)
    return a.reshape(-1, order="F")


# vec(S) = _CHI_TO_S @ vec(chi), with S the superoperator of sum chi_mn s_m . s_n^dagger
_CHI_TO_S = np.stack([_vec(np.kron(PAULI[n].conj(), PAULI[m]))
                      for n in range(4) for m in range(4)], axis=1)


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """``chi_mn`` over the operator basis ``(I, X, Y, Z)``."""

    chi: np.ndarray

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != (4, 4):
            raise ValueError("a qubit process matrix is 4x4")
        if np.abs(chi - chi.conj().T).max() > 1e-9:
            raise ValueError("process matrix must be Hermitian")
        object.__setattr__(self, "chi", chi)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(self.chi[m, n] * PAULI[m] @ rho @ PAULI[n].conj().T
                   for m in range(4) for n in range(4))

    def trace_map(self) -> np.ndarray:
        """``sum chi_mn s_n^dagger s_m``; the identity for trace-preserving maps."""
        return sum(self.chi[m, n] * PAULI[n].conj().T @ PAULI[m] for m in range(4) for n in range(4))

    def is_trace_preserving(self, tol: float = 1e-6) -> bool:
        return bool(np.abs(self.trace_map() - np.eye(2)).max() <= tol)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.chi)

    def to_json(self) -> str:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.chi]
        return json.dumps({"basis": list(PAULI_NAMES), "chi": rows}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ProcessMatrix":
        doc = json.loads(text)
        return cls(np.array([[re + 1j * im for re, im in row] for row in doc["chi"]]))


def process_tomography(inputs, outputs) -> ProcessMatrix:
    """Linear-inversion ``chi`` from four input states and their output density matrices.

    ``inputs`` may be state vectors or density matrices in the qubit frame.
    Negative eigenvalues (an unphysical reconstruction) are logged, not
    corrected.
    """
    ins = [np.asarray(r, dtype=complex) for r in inputs]
    ins = [projector(r) if r.ndim == 1 else r for r in ins]
    outs = [np.asarray(r, dtype=complex) for r in outputs]
    if len(ins) != len(outs) or len(ins) < 4:
        raise ValueError("need at least four input states with matching outputs")
    a = np.stack([_vec(r) for r in ins], axis=1)
    b = np.stack([_vec(r) for r in outs], axis=1)
    if np.linalg.matrix_rank(a, tol=1e-9) < 4:
        raise ValueError("input states do not span the qubit operator space")
    # superoperator S with S a = b
    s = b @ np.linalg.pinv(a)
    chi = np.linalg.solve(_CHI_TO_S, _vec(s)).reshape(4, 4, order="F")
    chi = 0.5 * (chi + chi.conj().T)
    pm = ProcessMatrix(chi)
    low = pm.eigenvalues.min()
    if low < -1e-9:
        log.warning("reconstructed process matrix has a negative eigenvalue (%.3g)", low)
    return pm


def unitary_chi(u: np.ndarray) -> ProcessMatrix:
    """``chi`` of the channel ``rho -> U rho U^dagger``."""
    c = np.array([np.trace(p.conj().T @ u) / 2 for p in PAULI])
    return ProcessMatrix(np.outer(c, c.conj()))


IDENTITY_CHI = unitary_chi(np.eye(2))


def process_fidelity(chi_exp, chi_th) -> float:
    """``Tr[chi_exp chi_th] / Tr[chi_th chi_th]``."""
    a = chi_exp.chi if isinstance(chi_exp, ProcessMatrix) else np.asarray(chi_exp)
    b = chi_th.chi if isinstance(chi_th, ProcessMatrix) else np.asarray(chi_th)
    denom = np.trace(b @ b)
    if abs(denom) == 0:
        raise ValueError("reference process matrix has Tr[chi^2] = 0")
    return float(np.real(np.trace(a @ b) / denom))


# {|+1>, |-1>, |+>, |+i>} as (basis position, state index) in qubit_bases()
TOMOGRAPHY_INPUTS = ((0, 1), (0, 0), (1, 0), (2, 0))


def channel_chi(channel: Channel, oam_labels=(-1, 1)) -> ProcessMatrix:
    """Process matrix of a simulated link, from six-state detection statistics.

    Each input of the standard four-state set is measured in all three bases
    (post-selected, ensemble-averaged), its output state is reconstructed by
    state tomography, and the four outputs are inverted to ``chi``.
    """
    bases = qubit_bases(oam_labels)
    transfers = transfer_matrices(channel, bases[0].oam_labels)
    table = {(i, j): detection_from_transfer(transfers, bi, bj).probabilities
             for i, bi in enumerate(bases) for j, bj in enumerate(bases)}
    ins, outs = [], []
    for b, k in TOMOGRAPHY_INPUTS:
        ins.append(frame_vectors(bases[b])[k])
        outs.append(state_tomography([table[b, j][k] for j in range(3)], bases))
    return process_tomography(ins, outs)
