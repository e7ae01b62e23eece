"""Statevector primitive tests against dense linear-algebra references."""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest
import scipy.linalg

from vqeac.operators import PauliSum, annihilation, creation, hamiltonian_to_pauli, jordan_wigner
from vqeac.statevector import (
    apply_ladder,
    apply_pauli_rotation,
    apply_pauli_sum,
    basis_state,
    expectation,
    occupation_to_parity,
    overlap,
    parity_to_occupation,
    prepare_reference,
    zero_state,
)

from conftest import random_integral_set
from oracles import dense_ladder, parity_permutation


def random_state(n_qubits: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return v / np.linalg.norm(v)


def test_basis_and_zero_states():
    s = zero_state(3)
    assert s[0] == 1.0 and np.count_nonzero(s) == 1
    s = basis_state(3, 5)
    assert s[5] == 1.0 and np.count_nonzero(s) == 1


def test_prepare_reference_occupation_and_parity():
    # modes 0 and 2 occupied: occupation index 0b101, parity bits 1,1,0 -> 0b011
    s = prepare_reference(3, [0, 2], mapping="jw")
    assert s[0b101] == 1.0
    s = prepare_reference(3, [0, 2], mapping="parity")
    assert s[0b011] == 1.0
    with pytest.raises(ValueError, match="twice"):
        prepare_reference(3, [1, 1])


def test_pauli_rotation_matches_dense_exponential():
    rng = np.random.default_rng(5)
    n = 3
    for letters in [{0: "X"}, {1: "Y"}, {0: "Z", 2: "Z"}, {0: "X", 1: "Y", 2: "Z"}]:
        p = PauliSum.from_letters(n, letters)
        (x, z), = p.terms.keys()
        theta = float(rng.normal())
        state = random_state(n, seed=int(rng.integers(1 << 20)))
        expected = scipy.linalg.expm(-0.5j * theta * p.to_dense()) @ state
        got = apply_pauli_rotation(state.copy(), x, z, theta)
        npt.assert_allclose(got, expected, atol=1e-13)


def test_pauli_rotation_composition_and_unitarity():
    state = random_state(4, seed=9)
    p = PauliSum.from_letters(4, {0: "X", 3: "Y"})
    (x, z), = p.terms.keys()
    out = apply_pauli_rotation(state.copy(), x, z, 0.7)
    npt.assert_allclose(np.linalg.norm(out), 1.0, rtol=1e-13)
    out = apply_pauli_rotation(out, x, z, -0.7)
    npt.assert_allclose(out, state, atol=1e-13)


def test_apply_pauli_sum_matches_dense():
    ints = random_integral_set(2, 2, seed=31)
    hq = hamiltonian_to_pauli(ints.core_energy, ints.h, ints.v, mapping="jw")
    state = random_state(4, seed=12)
    npt.assert_allclose(apply_pauli_sum(state, hq), hq.to_dense() @ state, atol=1e-12)


def test_expectation_matches_dense_quadratic_form():
    ints = random_integral_set(2, 2, seed=37)
    for mapping in ("jw", "parity"):
        hq = hamiltonian_to_pauli(ints.core_energy, ints.h, ints.v, mapping=mapping)
        state = random_state(4, seed=14)
        expected = np.vdot(state, hq.to_dense() @ state)
        npt.assert_allclose(expectation(state, hq), expected, atol=1e-12)
        assert abs(expectation(state, hq).imag) < 1e-12


def test_apply_ladder_matches_dense_oracle():
    state = random_state(3, seed=21)
    for mode in range(3):
        for dagger in (False, True):
            expected = dense_ladder(mode, 3, dagger) @ state
            npt.assert_allclose(apply_ladder(state, mode, dagger), expected, atol=1e-14)


def test_ladder_agrees_with_mapped_operator():
    state = random_state(3, seed=23)
    op = creation(1) * annihilation(2)
    via_pauli = apply_pauli_sum(state, jordan_wigner(op, 3))
    direct = apply_ladder(apply_ladder(state, 2, False), 1, True)
    npt.assert_allclose(via_pauli, direct, atol=1e-13)


def test_parity_transform_roundtrip_and_permutation():
    state = random_state(4, seed=25)
    par = occupation_to_parity(state, 4)
    npt.assert_allclose(parity_to_occupation(par, 4), state, atol=1e-15)
    perm = parity_permutation(4)
    npt.assert_allclose(par, perm @ state, atol=1e-15)


def test_overlap():
    a = basis_state(2, 1)
    b = basis_state(2, 1)
    npt.assert_allclose(overlap(a, 1j * b), 1j)
