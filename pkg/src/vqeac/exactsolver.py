"""Exact diagonalization in a fixed particle-number and spin-projection
sector, plus reduced density matrices from CI vectors.

Determinants are pairs of alpha/beta occupation strings (bitmasks over
spatial orbitals).  CI vectors are stored alpha-major: C[ia * n_beta_str + ib].
The string convention places all alpha creators left of all beta creators,
each group in ascending orbital order; conversions to the interleaved
spin-orbital statevector basis carry the corresponding crossing signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import numpy as np

from vqeac.integrals import EmbeddedHamiltonian

__all__ = [
    "DeterminantSpace",
    "GroundStateResult",
    "solve_ground_state",
    "casci_ground_state",
    "rdms_from_ci",
    "ci_to_statevector",
    "statevector_to_ci",
]

MAX_DENSE_DIM = 2000
MAX_DIM = 1_000_000


def occupation_strings(n_orb: int, n_occ: int) -> np.ndarray:
    """All bitmasks with n_occ bits set among n_orb, ascending."""
    if not 0 <= n_occ <= n_orb:
        raise ValueError(f"cannot place {n_occ} electrons in {n_orb} orbitals")
    masks = []
    for occ in combinations(range(n_orb), n_occ):
        m = 0
        for p in occ:
            m |= 1 << p
        masks.append(m)
    return np.array(sorted(masks), dtype=np.int64)


def _spread_even(x: int) -> int:
    """Move bit p to position 2p (interleave helper)."""
    out = 0
    p = 0
    while x:
        if x & 1:
            out |= 1 << (2 * p)
        x >>= 1
        p += 1
    return out


@dataclass
class DeterminantSpace:
    """Complete determinant basis for (n_orb, n_alpha, n_beta)."""

    n_orb: int
    n_alpha: int
    n_beta: int

    def __post_init__(self) -> None:
        self.alpha_strings = occupation_strings(self.n_orb, self.n_alpha)
        self.beta_strings = occupation_strings(self.n_orb, self.n_beta)
        self.n_astr = len(self.alpha_strings)
        self.n_bstr = len(self.beta_strings)
        self.dim = self.n_astr * self.n_bstr
        if self.dim > MAX_DIM:
            raise ValueError(f"determinant space dimension {self.dim} exceeds {MAX_DIM}")
        self._alpha_index = {int(s): i for i, s in enumerate(self.alpha_strings)}
        self._beta_index = {int(s): i for i, s in enumerate(self.beta_strings)}

    def alpha_index(self, string: int) -> int:
        return self._alpha_index[int(string)]

    def beta_index(self, string: int) -> int:
        return self._beta_index[int(string)]

    @staticmethod
    def _excitation_table(strings: np.ndarray, index: dict, p: int, q: int):
        """(sources, targets, signs) of a+_p a_q acting within one spin case."""
        src, tgt, sgn = [], [], []
        pb, qb = 1 << p, 1 << q
        for i, s in enumerate(strings):
            s = int(s)
            if not s & qb:
                continue
            if p != q and (s & pb):
                continue
            s2 = s ^ qb | pb
            # sign: electrons below q in s, then below p in s with q removed
            sign = 1.0
            if (s & (qb - 1)).bit_count() & 1:
                sign = -sign
            if ((s ^ qb) & (pb - 1)).bit_count() & 1:
                sign = -sign
            src.append(i)
            tgt.append(index[s2] if p != q else i)
            sgn.append(sign)
        return (
            np.array(src, dtype=np.int64),
            np.array(tgt, dtype=np.int64),
            np.array(sgn, dtype=np.float64),
        )

    @cached_property
    def alpha_tables(self) -> list:
        return [
            self._excitation_table(self.alpha_strings, self._alpha_index, p, q)
            for p in range(self.n_orb)
            for q in range(self.n_orb)
        ]

    @cached_property
    def beta_tables(self) -> list:
        return [
            self._excitation_table(self.beta_strings, self._beta_index, p, q)
            for p in range(self.n_orb)
            for q in range(self.n_orb)
        ]

    def apply_excitation(self, c: np.ndarray, p: int, q: int) -> np.ndarray:
        """E_pq C (spin-summed one-body excitation applied to a CI vector)."""
        c2 = c.reshape(self.n_astr, self.n_bstr)
        out = np.zeros_like(c2)
        src, tgt, sgn = self.alpha_tables[p * self.n_orb + q]
        if len(src):
            out[tgt, :] += sgn[:, None] * c2[src, :]
        src, tgt, sgn = self.beta_tables[p * self.n_orb + q]
        if len(src):
            out[:, tgt] += sgn[None, :] * c2[:, src]
        return out.reshape(c.shape)

    def excitation_stack(self, c: np.ndarray) -> np.ndarray:
        """All vectors E_pq C stacked as rows of an (n_orb**2, dim) array."""
        n = self.n_orb
        out = np.empty((n * n, self.dim))
        for p in range(n):
            for q in range(n):
                out[p * n + q] = self.apply_excitation(c, p, q).ravel()
        return out

    def sigma(self, c: np.ndarray, h: np.ndarray, v: np.ndarray, e_core: float) -> np.ndarray:
        """H C for the spin-summed Hamiltonian with chemists' integrals."""
        n = self.n_orb
        h_tilde = h - 0.5 * np.einsum("prrq->pq", v)
        d = self.excitation_stack(c)
        out = e_core * c + (h_tilde.reshape(-1) @ d).reshape(c.shape)
        t = v.reshape(n * n, n * n) @ d
        for pq in range(n * n):
            p, q = divmod(pq, n)
            out += 0.5 * self.apply_excitation(t[pq], p, q).reshape(c.shape)
        return out

    def h_diagonal(self, h: np.ndarray, v: np.ndarray, e_core: float) -> np.ndarray:
        """Diagonal matrix elements over all determinants (alpha-major)."""
        n = self.n_orb
        occ_a = ((self.alpha_strings[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        occ_b = ((self.beta_strings[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        hd = np.diag(h)
        jmat = np.einsum("ppqq->pq", v)
        kmat = np.einsum("pqqp->pq", v)
        one = occ_a @ hd
        one = one[:, None] + (occ_b @ hd)[None, :]
        jaa = np.einsum("ip,pq,iq->i", occ_a, jmat, occ_a)
        jbb = np.einsum("ip,pq,iq->i", occ_b, jmat, occ_b)
        jab = occ_a @ jmat @ occ_b.T
        kaa = np.einsum("ip,pq,iq->i", occ_a, kmat, occ_a)
        kbb = np.einsum("ip,pq,iq->i", occ_b, kmat, occ_b)
        diag = (
            e_core + one + jab
            + 0.5 * (jaa - kaa)[:, None]
            + 0.5 * (jbb - kbb)[None, :]
        )
        return diag.reshape(-1)

    def spin_square_values(self, c: np.ndarray) -> float:
        """<S^2> of a CI vector (diagnostic)."""
        # S^2 = S- S+ + Sz(Sz+1); S+ = sum_p a+_pa a_pb
        sz = 0.5 * (self.n_alpha - self.n_beta)
        c2 = c.reshape(self.n_astr, self.n_bstr)
        # apply S+: moves a beta electron to alpha in the same orbital
        if self.n_alpha == self.n_orb or self.n_beta == 0:
            splus = None
        else:
            target = DeterminantSpace(self.n_orb, self.n_alpha + 1, self.n_beta - 1)
            splus = np.zeros((target.n_astr, target.n_bstr))
            for ia, sa in enumerate(self.alpha_strings):
                for ib, sb in enumerate(self.beta_strings):
                    amp = c2[ia, ib]
                    if amp == 0.0:
                        continue
                    for p in range(self.n_orb):
                        pb = 1 << p
                        if (sb & pb) and not (sa & pb):
                            sign_b = -1.0 if (int(sb) & (pb - 1)).bit_count() & 1 else 1.0
                            sign_a = -1.0 if (int(sa) & (pb - 1)).bit_count() & 1 else 1.0
                            ja = target.alpha_index(int(sa) | pb)
                            jb = target.beta_index(int(sb) ^ pb)
                            splus[ja, jb] += amp * sign_a * sign_b
        val = sz * (sz + 1.0)
        if splus is not None:
            val += float(np.sum(splus * splus))
        return val


@dataclass
class GroundStateResult:
    energy: float
    ci: np.ndarray
    space: DeterminantSpace
    n_iterations: int
    converged: bool


def _dense_solve(space: DeterminantSpace, h, v, e_core) -> tuple[float, np.ndarray]:
    dim = space.dim
    mat = np.empty((dim, dim))
    unit = np.zeros(dim)
    for j in range(dim):
        unit[:] = 0.0
        unit[j] = 1.0
        mat[:, j] = space.sigma(unit, h, v, e_core)
    evals, evecs = np.linalg.eigh(mat)
    vec = evecs[:, 0]
    k = int(np.argmax(np.abs(vec)))
    if vec[k] < 0:
        vec = -vec
    return float(evals[0]), vec


def solve_ground_state(
    h: np.ndarray,
    v: np.ndarray,
    e_core: float,
    n_alpha: int,
    n_beta: int,
    tol: float = 1e-9,
    max_space: int = 40,
    max_iter: int = 300,
) -> GroundStateResult:
    """Lowest eigenpair of the sector Hamiltonian (Davidson with a dense
    fallback for small spaces).  Deterministic: the start vector is the unit
    vector on the lowest-diagonal determinant (lowest index on ties), and the
    returned eigenvector's largest-magnitude component is made positive.
    """
    space = DeterminantSpace(h.shape[0], n_alpha, n_beta)
    if space.dim <= MAX_DENSE_DIM:
        energy, vec = _dense_solve(space, h, v, e_core)
        return GroundStateResult(energy, vec, space, 0, True)

    diag = space.h_diagonal(h, v, e_core)
    dim = space.dim
    v0 = np.zeros(dim)
    v0[int(np.argmin(diag))] = 1.0
    basis = [v0]
    sigmas = [space.sigma(v0, h, v, e_core)]
    theta = float(diag.min())
    ritz = v0
    for it in range(1, max_iter + 1):
        m = len(basis)
        hm = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                hm[i, j] = float(basis[i] @ sigmas[j])
        hm = 0.5 * (hm + hm.T)
        evals, evecs = np.linalg.eigh(hm)
        theta = float(evals[0])
        y = evecs[:, 0]
        ritz = sum(y[i] * basis[i] for i in range(m))
        ritz_sigma = sum(y[i] * sigmas[i] for i in range(m))
        resid = ritz_sigma - theta * ritz
        if np.linalg.norm(resid) < tol:
            k = int(np.argmax(np.abs(ritz)))
            if ritz[k] < 0:
                ritz = -ritz
            return GroundStateResult(theta, ritz, space, it, True)
        if m >= max_space:
            basis = [ritz]
            sigmas = [ritz_sigma]
            continue
        denom = diag - theta
        denom = np.where(np.abs(denom) < 1e-10, np.copysign(1e-10, denom), denom)
        t = resid / denom
        for _ in range(2):
            for b in basis:
                t -= (b @ t) * b
        nt = np.linalg.norm(t)
        if nt < 1e-12:
            # deterministic escape: inject the lowest-diagonal determinant
            # not yet dominating the basis
            order = np.argsort(diag, kind="stable")
            for idx in order:
                t = np.zeros(dim)
                t[idx] = 1.0
                for b in basis:
                    t -= (b @ t) * b
                nt = np.linalg.norm(t)
                if nt > 1e-6:
                    break
        basis.append(t / nt)
        sigmas.append(space.sigma(basis[-1], h, v, e_core))
    k = int(np.argmax(np.abs(ritz)))
    if ritz[k] < 0:
        ritz = -ritz
    return GroundStateResult(theta, ritz, space, max_iter, False)


def sector_occupations(n_elec: int, ms2: int) -> tuple[int, int]:
    n_alpha = (n_elec + ms2) // 2
    n_beta = (n_elec - ms2) // 2
    if n_alpha + n_beta != n_elec or n_beta < 0:
        raise ValueError(f"incompatible n_elec={n_elec}, ms2={ms2}")
    return n_alpha, n_beta


def casci_ground_state(emb: EmbeddedHamiltonian, tol: float = 1e-9) -> GroundStateResult:
    """Exact ground state of an embedded active-space Hamiltonian."""
    n_alpha, n_beta = sector_occupations(emb.n_active_elec, emb.ms2)
    return solve_ground_state(emb.h_eff, emb.v_act, emb.e_core, n_alpha, n_beta, tol=tol)


def rdms_from_ci(space: DeterminantSpace, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spin-summed 1- and 2-RDMs of a CI vector.

    D[p, q] = <E_pq>; P[p, q, r, s] = <E_pq E_rs> - delta_qr <E_ps>, so the
    energy is e_core + sum h D + 1/2 sum (pq|rs) P[p,q,r,s].
    """
    n = space.n_orb
    c = c.ravel()
    stack = space.excitation_stack(c)
    dmat = (stack @ c).reshape(n, n)
    gram = stack @ stack.T  # <E_qp E_rs> indexed [(pq),(rs)] after transpose below
    big = gram.reshape(n, n, n, n).transpose(1, 0, 2, 3)
    pmat = big - np.einsum("qr,ps->pqrs", np.eye(n), dmat)
    return dmat, pmat


def energy_from_rdms(
    e_core: float, h: np.ndarray, v: np.ndarray, dmat: np.ndarray, pmat: np.ndarray
) -> float:
    return float(e_core + np.einsum("pq,pq->", h, dmat) + 0.5 * np.einsum("pqrs,pqrs->", v, pmat))


def _crossing_signs(space: DeterminantSpace) -> np.ndarray:
    """Sign relating the factorized string convention to the interleaved
    spin-orbital statevector convention, per determinant (n_astr, n_bstr).
    """
    n = space.n_orb
    signs = np.zeros((space.n_astr, space.n_bstr), dtype=np.int64)
    for q in range(n):
        a_above = np.array(
            [(int(s) >> (q + 1)).bit_count() & 1 for s in space.alpha_strings],
            dtype=np.int64,
        )
        b_has = ((space.beta_strings >> q) & 1).astype(np.int64)
        signs ^= a_above[:, None] & b_has[None, :]
    return 1 - 2 * signs


def _full_indices(space: DeterminantSpace) -> np.ndarray:
    sa = np.array([_spread_even(int(s)) for s in space.alpha_strings], dtype=np.int64)
    sb = np.array([_spread_even(int(s)) << 1 for s in space.beta_strings], dtype=np.int64)
    return sa[:, None] | sb[None, :]


def ci_to_statevector(space: DeterminantSpace, c: np.ndarray) -> np.ndarray:
    """Embed a CI vector into the full 2**(2 n_orb) statevector (occupation
    encoding, interleaved spin orbitals)."""
    psi = np.zeros(1 << (2 * space.n_orb), dtype=np.complex128)
    idx = _full_indices(space).reshape(-1)
    sgn = _crossing_signs(space).reshape(-1)
    psi[idx] = sgn * c.ravel()
    return psi


def statevector_to_ci(space: DeterminantSpace, psi: np.ndarray) -> np.ndarray:
    """Project a statevector onto the determinant sector (exact inverse of
    ci_to_statevector on sector-supported states)."""
    idx = _full_indices(space).reshape(-1)
    sgn = _crossing_signs(space).reshape(-1)
    vals = psi[idx] * sgn
    if np.max(np.abs(vals.imag)) > 1e-10:
        raise ValueError("sector projection expects a real-amplitude statevector")
    return vals.real.reshape(space.n_astr, space.n_bstr).ravel()
