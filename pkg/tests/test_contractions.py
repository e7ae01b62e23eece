"""Commutator contractions checked against direct CI-space operator algebra.

The oracle route never uses the RDM-contracted formulas: each expectation
value is evaluated by literally applying spin-summed excitations and the
Hamiltonian to a CI vector and taking inner products.
"""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from vqeac.contractions import (
    commutator_metric,
    double_commutator,
    generalized_fock,
    one_body_commutator,
)
from vqeac.exactsolver import DeterminantSpace, rdms_from_ci, solve_ground_state

from conftest import random_integral_set


def _excitation_cache(space, psi, h, v):
    """Precompute E_pq |psi>, H E_pq |psi>, E_pq H |psi> for all pairs."""
    n = h.shape[0]
    hpsi = space.sigma(psi, h, v, 0.0)
    x = {}
    hx = {}
    y = {}
    for p in range(n):
        for q in range(n):
            x[p, q] = space.apply_excitation(psi, p, q)
            hx[p, q] = space.sigma(x[p, q], h, v, 0.0)
            y[p, q] = space.apply_excitation(hpsi, p, q)
    return hpsi, x, hx, y


def _oracle_double_commutator(space, psi, h, v):
    """<[E_ab, [H, E_cd]]> for all quadruples, by operator application."""
    n = h.shape[0]
    hpsi, x, hx, y = _excitation_cache(space, psi, h, v)
    dc = np.empty((n, n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    t1 = np.vdot(x[b, a], hx[c, d])
                    t2 = np.vdot(x[b, a], y[c, d])
                    t3 = np.vdot(hpsi, space.apply_excitation(x[a, b], c, d))
                    t4 = np.vdot(x[d, c], hx[a, b])
                    dc[a, b, c, d] = t1 - t2 - t3 + t4
    return dc


def _oracle_hermitian_combination(space, psi, h, v):
    """1/2 <[E_ab, [H, E_cd]] + [[E_ab, H], E_cd]> by operator application."""
    n = h.shape[0]
    hpsi, x, hx, y = _excitation_cache(space, psi, h, v)
    out = np.empty((n, n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    # <A H B>, <A B H>, <H B A>, <B H A> with A=E_ab, B=E_cd.
                    ahb = np.vdot(x[b, a], hx[c, d])
                    abh = np.vdot(x[b, a], y[c, d])
                    hba = np.vdot(hpsi, space.apply_excitation(x[a, b], c, d))
                    bha = np.vdot(x[d, c], hx[a, b])
                    # <H A B> and <B A H> complete [[A, H], B].
                    hab = np.vdot(hpsi, space.apply_excitation(x[c, d], a, b))
                    bah = np.vdot(x[d, c], y[a, b])
                    first = ahb - abh - hba + bha
                    second = ahb - hab - bah + bha
                    out[a, b, c, d] = 0.5 * (first + second)
    return out


def _random_state(space, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(space.dim)
    return c / np.linalg.norm(c)


CASES = [
    pytest.param(2, 2, 7, id="closed-shell"),
    pytest.param(2, 1, 11, id="open-shell"),
]


@pytest.mark.parametrize("n_alpha,n_beta,seed", CASES)
def test_generalized_fock_matches_commutator(n_alpha, n_beta, seed):
    ints = random_integral_set(4, n_alpha + n_beta, seed)
    space = DeterminantSpace(4, n_alpha, n_beta)
    psi = _random_state(space, seed + 1)
    dmat, pmat = rdms_from_ci(space, psi)
    gf = generalized_fock(ints.h, ints.v, dmat, pmat)

    hpsi = space.sigma(psi, ints.h, ints.v, 0.0)
    oracle = np.empty((4, 4))
    for u in range(4):
        for w in range(4):
            heuw = np.vdot(hpsi, space.apply_excitation(psi, u, w))
            euwh = np.vdot(space.apply_excitation(psi, w, u), hpsi)
            oracle[u, w] = heuw - euwh
    npt.assert_allclose(one_body_commutator(gf), oracle, atol=1e-10)


def test_generalized_fock_antisymmetric_part_vanishes_on_eigenstate():
    ints = random_integral_set(4, 4, 3)
    res = solve_ground_state(ints.h, ints.v, 0.0, 2, 2)
    dmat, pmat = rdms_from_ci(res.space, res.ci)
    gf = generalized_fock(ints.h, ints.v, dmat, pmat)
    npt.assert_allclose(one_body_commutator(gf), np.zeros((4, 4)), atol=1e-9)


@pytest.mark.parametrize("n_alpha,n_beta,seed", CASES)
def test_double_commutator_matches_ci_oracle(n_alpha, n_beta, seed):
    ints = random_integral_set(4, n_alpha + n_beta, seed)
    space = DeterminantSpace(4, n_alpha, n_beta)
    psi = _random_state(space, seed + 2)
    dmat, pmat = rdms_from_ci(space, psi)

    dc = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=False)
    oracle = _oracle_double_commutator(space, psi, ints.h, ints.v)
    npt.assert_allclose(dc, oracle, atol=1e-10)


@pytest.mark.parametrize("n_alpha,n_beta,seed", CASES)
def test_symmetrized_matches_hermitian_combination(n_alpha, n_beta, seed):
    ints = random_integral_set(4, n_alpha + n_beta, seed)
    space = DeterminantSpace(4, n_alpha, n_beta)
    psi = _random_state(space, seed + 3)
    dmat, pmat = rdms_from_ci(space, psi)

    dc = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=True)
    oracle = _oracle_hermitian_combination(space, psi, ints.h, ints.v)
    npt.assert_allclose(dc, oracle, atol=1e-10)


def test_symmetrization_is_inert_on_eigenstate():
    ints = random_integral_set(4, 4, 5)
    res = solve_ground_state(ints.h, ints.v, 0.0, 2, 2)
    dmat, pmat = rdms_from_ci(res.space, res.ci)
    plain = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=False)
    sym = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=True)
    npt.assert_allclose(sym, plain, atol=1e-9)


@pytest.mark.parametrize("n_alpha,n_beta,seed", CASES)
def test_symmetrized_pair_and_adjoint_symmetry(n_alpha, n_beta, seed):
    # Both identities hold for any real state, eigenstate or not.
    ints = random_integral_set(4, n_alpha + n_beta, seed)
    space = DeterminantSpace(4, n_alpha, n_beta)
    psi = _random_state(space, seed + 4)
    dmat, pmat = rdms_from_ci(space, psi)
    dc = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=True)
    npt.assert_allclose(dc, dc.transpose(2, 3, 0, 1), atol=1e-11)
    npt.assert_allclose(dc, dc.transpose(3, 2, 1, 0), atol=1e-11)


@pytest.mark.parametrize("n_alpha,n_beta,seed", CASES)
def test_commutator_metric_matches_ci_oracle(n_alpha, n_beta, seed):
    ints = random_integral_set(4, n_alpha + n_beta, seed)
    space = DeterminantSpace(4, n_alpha, n_beta)
    psi = _random_state(space, seed + 5)
    dmat, _ = rdms_from_ci(space, psi)

    nc = commutator_metric(dmat)
    oracle = np.empty((4, 4, 4, 4))
    for a in range(4):
        for b in range(4):
            xba = space.apply_excitation(psi, b, a)
            xab = space.apply_excitation(psi, a, b)
            for c in range(4):
                for d in range(4):
                    fwd = np.vdot(xba, space.apply_excitation(psi, c, d))
                    bwd = np.vdot(space.apply_excitation(psi, d, c), xab)
                    oracle[a, b, c, d] = fwd - bwd
    npt.assert_allclose(nc, oracle, atol=1e-12)


def test_double_commutator_linear_in_operator():
    # The assembly is jointly linear in (h, v) at fixed RDMs, which the
    # alpha-interpolation relies on: M(alpha) = M0 + alpha * (M1 - M0).
    ints = random_integral_set(4, 4, 9)
    space = DeterminantSpace(4, 2, 2)
    psi = _random_state(space, 10)
    dmat, pmat = rdms_from_ci(space, psi)

    h2 = np.diag(np.arange(4, dtype=float))
    v2 = np.zeros((4, 4, 4, 4))
    full = double_commutator(ints.h + 2.0 * h2, ints.v + 2.0 * v2, dmat, pmat,
                             symmetrized=True)
    parts = (double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=True)
             + 2.0 * double_commutator(h2, v2, dmat, pmat, symmetrized=True))
    npt.assert_allclose(full, parts, atol=1e-11)
