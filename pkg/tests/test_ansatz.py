"""Ansatz construction, parameter counting and gate-cost accounting."""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from vqeac.ansatz import (
    AnsatzCircuit,
    ExcitationBlock,
    PauliBlock,
    empty_circuit,
    fermionic_pool,
    qubit_pool,
    reference_modes,
    uccd_circuit,
    uccsd_circuit,
)


def test_reference_modes():
    assert reference_modes(2, 2, 0) == (0, 1)
    assert reference_modes(3, 4, 0) == (0, 1, 2, 3)
    assert reference_modes(3, 3, 1) == (0, 1, 2)
    assert reference_modes(3, 3, 3) == (0, 2, 4)
    with pytest.raises(ValueError, match="incompatible"):
        reference_modes(3, 3, 0)


def test_excitation_block_validation_and_generator():
    with pytest.raises(ValueError, match="repeated mode"):
        ExcitationBlock(modes=(1, 1), param=0)
    with pytest.raises(ValueError, match="singles or doubles"):
        ExcitationBlock(modes=(0, 1, 2), param=0)
    k = ExcitationBlock(modes=(2, 0), param=0).generator()
    assert (k + k.dagger()).normal_order().terms == {}
    k2 = ExcitationBlock(modes=(2, 3, 1, 0), param=0).generator()
    assert (k2 + k2.dagger()).normal_order().terms == {}


def test_minimal_uccsd_counts():
    circ = uccsd_circuit(2, 2)
    # two spin-conserving singles and one double
    assert circ.n_params == 3
    assert len(circ.blocks) == 3
    assert circ.blocks[0].modes == (2, 0)
    assert circ.blocks[1].modes == (3, 1)
    assert circ.blocks[2].modes == (2, 3, 1, 0)


def test_uccsd_parameter_count_six_in_six():
    # 18 spin-conserving particle-hole singles and 99 doubles
    circ = uccsd_circuit(6, 6)
    assert circ.n_params == 117
    assert uccd_circuit(6, 6).n_params == 99
    singles = [b for b in circ.blocks if len(b.modes) == 2]
    doubles = [b for b in circ.blocks if len(b.modes) == 4]
    assert len(singles) == 18
    assert len(doubles) == 99


def test_rotation_expansion_and_antihermiticity():
    circ = uccsd_circuit(2, 2)
    rots = circ.pauli_rotations()
    # singles expand to 2 strings, the double to 8
    assert len(rots) == 2 + 2 + 8
    for x, z, coeff, _ in rots:
        assert isinstance(coeff, float)
        assert ((x & z).bit_count()) % 2 == 1  # odd Y count
    npt.assert_allclose(sorted(abs(r[2]) for r in rots[:4]), [0.5] * 4)
    npt.assert_allclose(sorted(abs(r[2]) for r in rots[4:]), [0.125] * 8)


def test_rotations_stay_grouped_by_block():
    circ = uccsd_circuit(3, 2)
    params = [r[3] for r in circ.pauli_rotations()]
    # parameter indices appear in contiguous runs
    runs = [params[0]]
    for p in params[1:]:
        if p != runs[-1]:
            runs.append(p)
    assert runs == sorted(set(params))


def test_cnot_count_minimal_uccsd():
    # singles: two weight-3 rotations each -> 2 * 2(3-1) = 8 per single;
    # double: eight weight-4 rotations -> 8 * 2(4-1) = 48
    circ = uccsd_circuit(2, 2)
    assert circ.cnot_count() == 8 + 8 + 48
    single_only = AnsatzCircuit(4, (0, 1), [ExcitationBlock((2, 0), 0)], 1)
    assert single_only.cnot_count() == 8


def test_cnot_count_pauli_block():
    circ = AnsatzCircuit(4, (0, 1), [PauliBlock(x=0b1111, z=0b0001, param=0)], 1)
    assert circ.cnot_count() == 2 * 3
    assert circ.n_rotations() == 1


def test_fermionic_pool_structure():
    pool = fermionic_pool(2, 2)
    # one spatial single move (0 -> 1) and one double pair
    assert [op.label for op in pool] == ["s_1_0", "d_1_0_1_0"]
    assert len(pool[0].blocks) == 2
    # diagonal pair double collapses to aa, bb removed and ab with weight 2
    weights = sorted(b.weight for b in pool[1].blocks)
    assert weights == [2.0]
    pool = fermionic_pool(3, 2)
    # 2 singles (0->1, 0->2), 3 doubles (pairs of 2 moves with repetition)
    assert len(pool) == 2 + 3


def test_fermionic_pool_rejects_open_shell():
    with pytest.raises(ValueError, match="closed-shell"):
        fermionic_pool(3, 3, ms2=1)


def test_qubit_pool_stripped_strings():
    pool = qubit_pool(2, 2)
    assert len(pool) == 12
    for op in pool:
        (block,) = op.blocks
        assert isinstance(block, PauliBlock)
        # no pure-Z letters survive stripping
        assert block.z & ~block.x == 0
        assert block.n_y() % 2 == 1
    keys = [(op.blocks[0].x, op.blocks[0].z) for op in pool]
    assert len(set(keys)) == len(keys)


def test_append_binds_fresh_parameter():
    circ = empty_circuit(2, 2)
    pool = fermionic_pool(2, 2)
    idx = circ.append(pool[1])
    assert idx == 0
    assert circ.n_params == 1
    assert all(b.param == 0 for b in circ.blocks)
    idx = circ.append(pool[0])
    assert idx == 1
    assert circ.n_params == 2
    assert [b.param for b in circ.blocks] == [0, 1, 1]


def test_block_outside_register_rejected():
    with pytest.raises(ValueError, match="outside the qubit register"):
        AnsatzCircuit(2, (0, 1), [ExcitationBlock((2, 0), 0)], 1)
