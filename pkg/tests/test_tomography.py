import logging

import numpy as np
import pytest
from scipy.stats import unitary_group

from twistedqkd.propagation import water
from twistedqkd.quantum import Channel
from twistedqkd.tomography import (IDENTITY_CHI, PAULI, ProcessMatrix, channel_chi, fidelity,
                                   frame_vectors, process_fidelity, process_tomography, projector,
                                   qubit_bases, state_tomography, unitary_chi)
from twistedqkd.turbulence import default_model, sample_screen

from conftest import WAIST

# |+1>, |-1>, |+>, |+i> in the (|+1>, |-1>) frame
INPUTS = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2),
          np.array([1, 1j]) / np.sqrt(2)]


def _freqs(rho):
    """Born-rule frequencies of ``rho`` in the three qubit bases."""
    return [[float(np.real(v.conj() @ rho @ v)) for v in frame_vectors(b)] for b in qubit_bases()]


def _random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def _random_rho(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    r = g @ g.conj().T
    return r / np.trace(r)


def test_eigenstate_of_plus_one():
    rho = state_tomography(_freqs(projector([1, 0])))
    assert np.abs(rho - np.diag([1, 0])).max() < 1e-9


def test_maximally_mixed():
    rho = state_tomography([[0.5, 0.5]] * 3)
    assert np.abs(rho - np.eye(2) / 2).max() < 1e-15


@pytest.mark.parametrize("seed", range(20))
def test_pure_state_round_trip(seed):
    psi = _random_state(np.random.default_rng(seed))
    rho = state_tomography(_freqs(projector(psi)))
    assert fidelity(rho, psi) > 1 - 1e-9


def test_state_tomography_validation():
    with pytest.raises(ValueError, match="summing to 1"):
        state_tomography([[0.5, 0.6], [0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        state_tomography([[0.5, 0.5]] * 2)


def test_pauli_expectations():
    # rho = (I + s.sigma)/2 for the Bloch vector s
    s = np.array([0.3, -0.2, 0.5])
    rho = (np.eye(2) + sum(c * p for c, p in zip(s, PAULI[1:]))) / 2
    assert np.allclose(state_tomography(_freqs(rho)), rho, atol=1e-14)


def _outputs(channel_fn):
    return [channel_fn(projector(v)) for v in INPUTS]


def test_identity_process():
    chi = process_tomography(INPUTS, _outputs(lambda r: r)).chi
    want = np.zeros((4, 4))
    want[0, 0] = 1
    assert np.abs(chi - want).max() < 1e-9


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pauli_conjugation(k):
    p = PAULI[k]
    chi = process_tomography(INPUTS, _outputs(lambda r: p @ r @ p.conj().T)).chi
    want = np.zeros((4, 4))
    want[k, k] = 1
    assert np.abs(chi - want).max() < 1e-9


def test_random_unitary_action():
    rng = np.random.default_rng(0)
    u = unitary_group.rvs(2, random_state=1)
    chi = process_tomography(INPUTS, _outputs(lambda r: u @ r @ u.conj().T))
    worst = 0.0
    for _ in range(100):
        rho = _random_rho(rng)
        worst = max(worst, np.abs(chi.apply(rho) - u @ rho @ u.conj().T).max())
    assert worst < 1e-6
    assert np.abs(chi.chi - unitary_chi(u).chi).max() < 1e-9


def test_non_unitary_channel_action():
    # amplitude damping plus dephasing, checked on random states
    g = 0.3
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]])
    k1 = np.array([[0, np.sqrt(g)], [0, 0]])

    def channel(r):
        r = k0 @ r @ k0.conj().T + k1 @ r @ k1.conj().T
        return 0.8 * r + 0.2 * PAULI[3] @ r @ PAULI[3]

    chi = process_tomography(INPUTS, _outputs(channel))
    rng = np.random.default_rng(4)
    for _ in range(100):
        rho = _random_rho(rng)
        assert np.abs(chi.apply(rho) - channel(rho)).max() < 1e-6
    assert np.abs(chi.chi - chi.chi.conj().T).max() < 1e-9
    assert chi.is_trace_preserving()


def test_rank_deficient_inputs_rejected():
    ins = [INPUTS[0], INPUTS[1], INPUTS[0], INPUTS[1]]
    with pytest.raises(ValueError, match="span"):
        process_tomography(ins, _outputs(lambda r: r)[:4])
    with pytest.raises(ValueError):
        process_tomography(INPUTS[:3], _outputs(lambda r: r)[:3])


def test_process_matrix_validation_and_json():
    with pytest.raises(ValueError):
        ProcessMatrix(np.triu(np.ones((4, 4))))
    u = unitary_group.rvs(2, random_state=3)
    chi = unitary_chi(u)
    back = ProcessMatrix.from_json(chi.to_json())
    assert np.array_equal(back.chi, chi.chi)


def test_fidelity_values():
    rng = np.random.default_rng(2)
    for seed in range(5):
        chi = unitary_chi(unitary_group.rvs(2, random_state=seed))
        assert process_fidelity(chi, chi) == pytest.approx(1, abs=1e-12)
    x = unitary_chi(PAULI[1])
    assert process_fidelity(IDENTITY_CHI, x) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        process_fidelity(IDENTITY_CHI, np.zeros((4, 4)))
    # symmetric when both have the same purity
    a, b = (unitary_chi(unitary_group.rvs(2, random_state=int(s))) for s in rng.integers(100, size=2))
    assert process_fidelity(a, b) == pytest.approx(process_fidelity(b, a), abs=1e-12)


def test_negative_eigenvalue_is_flagged(caplog):
    # outputs that no physical map produces: |+1> -> |-1> while everything else stays put
    outs = _outputs(lambda r: r)
    outs[0] = projector([0, 1])
    with caplog.at_level(logging.WARNING):
        chi = process_tomography(INPUTS, outs)
    assert chi.eigenvalues.min() < 0
    assert "negative eigenvalue" in caplog.text


def test_ideal_link_is_identity(grid128):
    chi = channel_chi(Channel(grid128, WAIST, 3.0, water(0.0)))
    assert process_fidelity(chi, IDENTITY_CHI) == pytest.approx(1, abs=1e-9)


def test_fidelity_falls_with_turbulence(grid256):
    base = default_model()
    fids = []
    for strength in (0.0, 0.5, 1.0, 1.5, 2.0):
        model = base.scaled(strength)
        rng = model.rng(0)
        screens = tuple(sample_screen(model, grid256, 3 * WAIST, rng)[0] for _ in range(20))
        chi = channel_chi(Channel(grid256, WAIST, 3.0, water(0.0), screens=screens))
        assert chi.is_trace_preserving()
        fids.append(process_fidelity(chi, IDENTITY_CHI))
    assert fids[0] == pytest.approx(1, abs=1e-9)
    assert all(b < a for a, b in zip(fids, fids[1:])), fids
