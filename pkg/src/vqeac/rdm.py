"""Reduced density matrices of prepared states.

Spin-summed conventions over spatial orbitals p, q, r, s:

    D_pq   = <E_pq>
    P_pqrs = sum_{st} <a+_{ps} a+_{rt} a_{st} a_{qs}>
           = <E_pq E_rs> - delta_qr <E_ps>

so the electronic energy is

    E = e_core + sum_pq h_pq D_pq + 1/2 sum_pqrs (pq|rs) P_pqrs.

Two independent measurement routes are implemented and pinned against each
other by tests:

* mapped-operator route: expectation values of the encoded excitation
  operators on the register state;
* annihilation-Gram route: overlaps of singly/doubly annihilated states,
  i.e. projections onto the (N-1)- and (N-2)-electron sectors, either on
  the determinant-sector amplitudes or on the full register.

measure_rdms picks the production route for each execution path: the
mapped route for D, the annihilation Gram for P.
"""

from __future__ import annotations

import numpy as np

from vqeac import statevector as sv
from vqeac.exactsolver import DeterminantSpace
from vqeac.integrals import ActiveSpace
from vqeac.operators import excitation, map_operator
from vqeac.vqe import VqeProblem

__all__ = [
    "rdm1_mapped",
    "rdm2_mapped",
    "rdm1_pair_gram",
    "rdm2_pair_gram_full",
    "rdm2_pair_gram_sector",
    "measure_rdms",
    "expand_rdms",
]

REALITY_TOL = 1e-8


def _real_guarded(value: complex, what: str) -> float:
    if abs(value.imag) > REALITY_TOL:
        raise ValueError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def rdm1_mapped(psi: np.ndarray, n_spatial: int, mapping: str = "jw") -> np.ndarray:
    """1-RDM from expectation values of the mapped excitation operators.

    Works in any encoding; psi is the register state in that encoding.
    """
    n_qubits = 2 * n_spatial
    d = np.zeros((n_spatial, n_spatial))
    for p in range(n_spatial):
        for q in range(p, n_spatial):
            op = map_operator(excitation(p, q), n_qubits, mapping)
            val = _real_guarded(sv.expectation(psi, op), f"<E_{p}{q}>")
            d[p, q] = d[q, p] = val
    return d


def rdm2_mapped(psi: np.ndarray, n_spatial: int, mapping: str = "jw") -> np.ndarray:
    """2-RDM from mapped excitation operators, P_pqrs = <E_pq E_rs> - d_qr <E_ps>.

    Cross-check route; cost grows as n_spatial**2 register applications.
    """
    n = n_spatial
    n_qubits = 2 * n
    dim = psi.shape[0]
    stack = np.empty((n, n, dim), dtype=complex)
    for p in range(n):
        for q in range(n):
            stack[p, q] = sv.apply_pauli_sum(psi, map_operator(excitation(p, q), n_qubits, mapping))
    flat = stack.reshape(n * n, dim)
    # <E_pq E_rs> = <E_qp psi, E_rs psi>
    g = (flat.conj() @ flat.T).reshape(n, n, n, n)
    pmat = np.einsum("qprs->pqrs", g)
    d = np.einsum("d,pqd->pq", psi.conj(), stack)
    pmat -= np.einsum("qr,ps->pqrs", np.eye(n), d)
    if np.abs(pmat.imag).max() > REALITY_TOL:
        raise ValueError("2-RDM has a non-real component")
    return pmat.real


def rdm1_pair_gram(psi_occ: np.ndarray, n_spatial: int) -> np.ndarray:
    """1-RDM as a Gram matrix of singly annihilated states.

    D_pq = sum_s <a_{ps} psi, a_{qs} psi>; occupation encoding required.
    """
    m = 2 * n_spatial
    stack = np.empty((m, psi_occ.shape[0]), dtype=psi_occ.dtype)
    for mode in range(m):
        stack[mode] = sv.apply_ladder(psi_occ, mode, dagger=False)
    g = stack.conj() @ stack.T
    d = g[0::2, 0::2] + g[1::2, 1::2]
    if np.abs(d.imag).max() > REALITY_TOL:
        raise ValueError("1-RDM has a non-real component")
    return d.real


def rdm2_pair_gram_full(psi_occ: np.ndarray, n_spatial: int) -> np.ndarray:
    """2-RDM as a Gram matrix of doubly annihilated register states.

    P_pqrs = sum_{st} <a_{rt} a_{ps} psi, a_{st} a_{qs} psi>; occupation
    encoding required.
    """
    n = n_spatial
    dim = psi_occ.shape[0]
    pmat = np.zeros((n, n, n, n), dtype=complex)
    for s_spin in (0, 1):
        singly = np.empty((n, dim), dtype=psi_occ.dtype)
        for p in range(n):
            singly[p] = sv.apply_ladder(psi_occ, 2 * p + s_spin, dagger=False)
        for t_spin in (0, 1):
            w = np.empty((n, n, dim), dtype=psi_occ.dtype)
            for p in range(n):
                for r in range(n):
                    w[r, p] = sv.apply_ladder(singly[p], 2 * r + t_spin, dagger=False)
            flat = w.reshape(n * n, dim)
            g = (flat.conj() @ flat.T).reshape(n, n, n, n)
            pmat += np.einsum("rpsq->pqrs", g)
    if np.abs(pmat.imag).max() > REALITY_TOL:
        raise ValueError("2-RDM has a non-real component")
    return pmat.real


def _annihilation_maps(strings: np.ndarray, target: DeterminantSpace, p: int, spin: str):
    """(src, tgt, sign) index maps of one annihilation within a spin case."""
    pb = 1 << p
    src = np.nonzero((strings & pb) != 0)[0]
    lookup = target.alpha_index if spin == "alpha" else target.beta_index
    tgt = np.array([lookup(s ^ pb) for s in strings[src]], dtype=np.int64)
    below = [int(s & (pb - 1)).bit_count() & 1 for s in strings[src]]
    sign = 1.0 - 2.0 * np.array(below)
    return src, tgt, sign


def _annihilate_alpha(space: DeterminantSpace, target: DeterminantSpace,
                      c2: np.ndarray, p: int) -> np.ndarray:
    src, tgt, sign = _annihilation_maps(space.alpha_strings, target, p, "alpha")
    out = np.zeros((target.n_astr, space.n_bstr))
    out[tgt] = sign[:, None] * c2[src]
    return out


def _annihilate_beta(space: DeterminantSpace, target: DeterminantSpace,
                     c2: np.ndarray, p: int) -> np.ndarray:
    src, tgt, sign = _annihilation_maps(space.beta_strings, target, p, "beta")
    # crossing all alpha creators first
    if space.n_alpha & 1:
        sign = -sign
    out = np.zeros((space.n_astr, target.n_bstr))
    out[:, tgt] = sign[None, :] * c2[:, src]
    return out


def rdm2_pair_gram_sector(space: DeterminantSpace, c: np.ndarray) -> np.ndarray:
    """2-RDM of a determinant-sector CI vector via the annihilation Gram."""
    n = space.n_orb
    c2 = np.asarray(c, dtype=float).reshape(space.n_astr, space.n_bstr)
    pmat = np.zeros((n, n, n, n))

    def same_spin(first, second, mid: DeterminantSpace, tgt: DeterminantSpace):
        w = np.zeros((n, n, tgt.dim))
        for p in range(n):
            vp = first(space, mid, c2, p)
            for r in range(n):
                if r != p:
                    w[r, p] = second(mid, tgt, vp, r).ravel()
        flat = w.reshape(n * n, tgt.dim)
        g = (flat @ flat.T).reshape(n, n, n, n)
        return np.einsum("rpsq->pqrs", g)

    if space.n_alpha >= 2:
        mid = DeterminantSpace(n, space.n_alpha - 1, space.n_beta)
        tgt = DeterminantSpace(n, space.n_alpha - 2, space.n_beta)
        pmat += same_spin(_annihilate_alpha, _annihilate_alpha, mid, tgt)
    if space.n_beta >= 2:
        mid = DeterminantSpace(n, space.n_alpha, space.n_beta - 1)
        tgt = DeterminantSpace(n, space.n_alpha, space.n_beta - 2)
        pmat += same_spin(_annihilate_beta, _annihilate_beta, mid, tgt)
    if space.n_alpha >= 1 and space.n_beta >= 1:
        mid = DeterminantSpace(n, space.n_alpha - 1, space.n_beta)
        tgt = DeterminantSpace(n, space.n_alpha - 1, space.n_beta - 1)
        w = np.zeros((n, n, tgt.dim))
        for p in range(n):
            vp = _annihilate_alpha(space, mid, c2, p)
            for r in range(n):
                w[r, p] = _annihilate_beta(mid, tgt, vp, r).ravel()
        flat = w.reshape(n * n, tgt.dim)
        g = (flat @ flat.T).reshape(n, n, n, n)
        # mixed-spin cases (alpha, beta) and (beta, alpha)
        pmat += np.einsum("rpsq->pqrs", g)
        pmat += np.einsum("prqs->pqrs", g)
    return pmat


def measure_rdms(problem: VqeProblem, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Production (D, P) of a prepared state on either execution path."""
    n = problem.emb.n_active_orb
    psi = problem.to_statevector(state)
    d = rdm1_mapped(psi, n, problem.mapping)
    if problem.space is not None:
        p = rdm2_pair_gram_sector(problem.space, state)
    else:
        psi_occ = psi
        if problem.mapping == "parity":
            psi_occ = sv.parity_to_occupation(psi, 2 * n)
        p = rdm2_pair_gram_full(psi_occ, n)
    return d, p


def expand_rdms(window: ActiveSpace, d_act: np.ndarray,
                p_act: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expand active-space RDMs to the full orbital window.

    The inactive orbitals are a closed shell; virtual blocks vanish.  The
    expanded (D, P) reproduce the total electronic energy when contracted
    with the untransformed full-window integrals.
    """
    inactive = np.asarray(window.inactive, dtype=np.int64)
    active = np.asarray(window.active, dtype=np.int64)
    n = len(window.inactive) + len(window.active) + len(window.virtual)
    d = np.zeros((n, n))
    d[inactive, inactive] = 2.0
    d[np.ix_(active, active)] = d_act
    p = np.zeros((n, n, n, n))
    for i in inactive:
        for j in inactive:
            p[i, i, j, j] += 4.0
            p[i, j, j, i] -= 2.0
        p[i, i][np.ix_(active, active)] = 2.0 * d_act
        p[:, :, i, i][np.ix_(active, active)] = 2.0 * d_act
        p[i, :, :, i][np.ix_(active, active)] = -d_act
        p[:, i, i, :][np.ix_(active, active)] = -d_act
    p[np.ix_(active, active, active, active)] = p_act
    return d, p
