"""Exact-diagonalization tests against dense Fock-space references."""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from vqeac.exactsolver import (
    DeterminantSpace,
    casci_ground_state,
    ci_to_statevector,
    energy_from_rdms,
    occupation_strings,
    rdms_from_ci,
    sector_occupations,
    solve_ground_state,
    statevector_to_ci,
)
from vqeac.integrals import ActiveSpace, IntegralSet, embed_active_space
from vqeac.operators import excitation, hamiltonian_to_fermion

from conftest import random_integral_set
from oracles import dense_hamiltonian, fermion_to_dense


def sector_spectrum_dense(ints, n_alpha, n_beta):
    """Eigenvalues of the dense Hamiltonian restricted to a spin sector."""
    hmat = dense_hamiltonian(ints.core_energy, ints.h, ints.v)
    n = ints.n_orb
    dim = 1 << (2 * n)
    keep = []
    for b in range(dim):
        na = sum((b >> (2 * p)) & 1 for p in range(n))
        nb = sum((b >> (2 * p + 1)) & 1 for p in range(n))
        if na == n_alpha and nb == n_beta:
            keep.append(b)
    sub = hmat[np.ix_(keep, keep)]
    return np.linalg.eigvalsh(sub)


def test_occupation_strings_count_and_order():
    s = occupation_strings(4, 2)
    assert len(s) == 6
    assert list(s) == sorted(s)
    assert s[0] == 0b0011
    with pytest.raises(ValueError):
        occupation_strings(2, 3)


def test_determinant_space_dimensions():
    space = DeterminantSpace(4, 2, 1)
    assert space.n_astr == 6
    assert space.n_bstr == 4
    assert space.dim == 24


def test_excitation_application_matches_dense():
    space = DeterminantSpace(3, 2, 1)
    rng = np.random.default_rng(3)
    c = rng.normal(size=space.dim)
    psi = ci_to_statevector(space, c)
    for p in range(3):
        for q in range(3):
            e_dense = fermion_to_dense(excitation(p, q), 6)
            expected = e_dense @ psi
            got = ci_to_statevector(space, space.apply_excitation(c, p, q))
            npt.assert_allclose(got, expected, atol=1e-12)


def test_sigma_matches_dense_sector_hamiltonian():
    ints = random_integral_set(3, 3, seed=41)
    space = DeterminantSpace(3, 2, 1)
    rng = np.random.default_rng(4)
    c = rng.normal(size=space.dim)
    sigma = space.sigma(c, ints.h, ints.v, ints.core_energy)
    hmat = dense_hamiltonian(ints.core_energy, ints.h, ints.v)
    expected = hmat @ ci_to_statevector(space, c)
    npt.assert_allclose(ci_to_statevector(space, sigma), expected, atol=1e-11)


def test_h_diagonal_matches_sigma_diagonal():
    ints = random_integral_set(3, 3, seed=43)
    space = DeterminantSpace(3, 1, 2)
    diag = space.h_diagonal(ints.h, ints.v, ints.core_energy)
    for i in [0, 3, space.dim - 1]:
        unit = np.zeros(space.dim)
        unit[i] = 1.0
        npt.assert_allclose(
            diag[i], space.sigma(unit, ints.h, ints.v, ints.core_energy)[i], rtol=1e-12
        )


def test_ground_state_matches_dense_spectrum():
    ints = random_integral_set(3, 3, seed=47)
    for n_alpha, n_beta in [(2, 1), (1, 1), (3, 0)]:
        res = solve_ground_state(ints.h, ints.v, ints.core_energy, n_alpha, n_beta)
        assert res.converged
        ref = sector_spectrum_dense(ints, n_alpha, n_beta)
        npt.assert_allclose(res.energy, ref[0], atol=1e-9)


def test_davidson_agrees_with_dense_path():
    # Force the iterative branch by shrinking the dense-dimension cutoff.
    import vqeac.exactsolver as mod

    ints = random_integral_set(4, 4, seed=53)
    res_dense = solve_ground_state(ints.h, ints.v, ints.core_energy, 2, 2)
    old = mod.MAX_DENSE_DIM
    mod.MAX_DENSE_DIM = 1
    try:
        res_dav = solve_ground_state(ints.h, ints.v, ints.core_energy, 2, 2)
    finally:
        mod.MAX_DENSE_DIM = old
    assert res_dav.converged
    npt.assert_allclose(res_dav.energy, res_dense.energy, atol=1e-8)
    npt.assert_allclose(np.abs(res_dav.ci @ res_dense.ci), 1.0, atol=1e-7)


def test_rdms_reproduce_energy_and_dense_values():
    ints = random_integral_set(3, 3, seed=59)
    res = solve_ground_state(ints.h, ints.v, ints.core_energy, 2, 1)
    dmat, pmat = rdms_from_ci(res.space, res.ci)
    npt.assert_allclose(
        energy_from_rdms(ints.core_energy, ints.h, ints.v, dmat, pmat),
        res.energy,
        rtol=1e-11,
    )
    psi = ci_to_statevector(res.space, res.ci)
    n = ints.n_orb
    for p in range(n):
        for q in range(n):
            e_dense = fermion_to_dense(excitation(p, q), 2 * n)
            npt.assert_allclose(dmat[p, q], np.vdot(psi, e_dense @ psi).real, atol=1e-10)
    # spot-check a few 2-RDM elements against <E_pq E_rs> - delta <E_ps>
    rng = np.random.default_rng(8)
    for _ in range(6):
        p, q, r, s = rng.integers(0, n, size=4)
        op = excitation(p, q) * excitation(r, s)
        val = np.vdot(psi, fermion_to_dense(op, 2 * n) @ psi).real
        if q == r:
            val -= dmat[p, s]
        npt.assert_allclose(pmat[p, q, r, s], val, atol=1e-10)


def test_rdm_symmetries():
    ints = random_integral_set(3, 4, seed=61)
    res = solve_ground_state(ints.h, ints.v, ints.core_energy, 2, 2)
    dmat, pmat = rdms_from_ci(res.space, res.ci)
    npt.assert_allclose(dmat, dmat.T, atol=1e-12)
    npt.assert_allclose(pmat, pmat.transpose(2, 3, 0, 1), atol=1e-12)
    npt.assert_allclose(pmat, pmat.transpose(1, 0, 3, 2), atol=1e-12)
    npt.assert_allclose(np.trace(dmat), 4.0, atol=1e-12)
    # partial trace: sum_r P[p,q,r,r] = (N - 1) D[p,q]
    npt.assert_allclose(np.einsum("pqrr->pq", pmat), 3.0 * dmat, atol=1e-11)


def test_statevector_roundtrip_and_energy():
    ints = random_integral_set(3, 3, seed=67)
    res = solve_ground_state(ints.h, ints.v, ints.core_energy, 2, 1)
    psi = ci_to_statevector(res.space, res.ci)
    npt.assert_allclose(np.linalg.norm(psi), 1.0, rtol=1e-12)
    hmat = dense_hamiltonian(ints.core_energy, ints.h, ints.v)
    npt.assert_allclose(np.vdot(psi, hmat @ psi).real, res.energy, rtol=1e-10)
    back = statevector_to_ci(res.space, psi)
    npt.assert_allclose(back, res.ci, atol=1e-13)


def test_casci_ground_state_on_embedded_hamiltonian():
    ints = random_integral_set(4, 4, seed=71)
    cas = ActiveSpace.build(4, 4, 2, 2)
    emb = embed_active_space(ints, cas)
    res = casci_ground_state(emb)
    # oracle: diagonalize the embedded Hamiltonian densely
    act_ints = IntegralSet(2, 2, 0, emb.e_core, emb.h_eff, emb.v_act)
    ref = sector_spectrum_dense(act_ints, 1, 1)
    npt.assert_allclose(res.energy, ref[0], atol=1e-9)


def test_sector_occupations():
    assert sector_occupations(6, 0) == (3, 3)
    assert sector_occupations(5, 1) == (3, 2)
    with pytest.raises(ValueError):
        sector_occupations(5, 0)


def test_spin_square_of_singlet_ground_state():
    ints = random_integral_set(3, 2, seed=73)
    res = solve_ground_state(ints.h, ints.v, ints.core_energy, 1, 1)
    s2 = res.space.spin_square_values(res.ci)
    npt.assert_allclose(s2, 0.0, atol=1e-9)


def test_hamiltonian_fermion_route_consistency():
    # The second-quantized builder and the string sigma must encode the same
    # Hamiltonian.
    ints = random_integral_set(2, 2, seed=79)
    hop = hamiltonian_to_fermion(ints.core_energy, ints.h, ints.v)
    hmat = fermion_to_dense(hop, 4)
    space = DeterminantSpace(2, 1, 1)
    rng = np.random.default_rng(5)
    c = rng.normal(size=space.dim)
    lhs = ci_to_statevector(space, space.sigma(c, ints.h, ints.v, ints.core_energy))
    rhs = hmat @ ci_to_statevector(space, c)
    npt.assert_allclose(lhs, rhs, atol=1e-12)
