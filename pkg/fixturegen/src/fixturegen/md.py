"""Gaussian integrals over contracted Cartesian shells.

Hermite-expansion (McMurchie-Davidson) evaluation of overlap, kinetic,
nuclear-attraction and electron-repulsion integrals, followed by a
Cartesian-to-spherical mapping for d shells and a final per-function
renormalization.  Everything is dense; the target systems are small
fixture molecules.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma, gammainc

from .basis import Shell, cartesian_powers


def boys(n_max: int, t: np.ndarray) -> np.ndarray:
    """Boys functions F_0..F_n for an array of arguments, shape (n+1, *t)."""
    t = np.asarray(t, dtype=float)
    out = np.empty((n_max + 1,) + t.shape)
    small = t < 1e-13
    t_safe = np.where(small, 1.0, t)
    for n in range(n_max + 1):
        a = n + 0.5
        val = 0.5 * gamma(a) * gammainc(a, t_safe) / t_safe**a
        out[n] = np.where(small, 1.0 / (2 * n + 1) - t / (2 * n + 3), val)
    return out


def hermite_expansion(l_a: int, l_b: int, pa: np.ndarray, pb: np.ndarray,
                      p: np.ndarray) -> np.ndarray:
    """1D Hermite coefficients E[i, j, t] vectorized over primitive pairs.

    The Gaussian product prefactor exp(-mu X^2) is deliberately left out;
    callers fold the three-dimensional prefactor in exactly once.

    Args:
        l_a, l_b: maximum Cartesian powers on either side.
        pa, pb: P-A and P-B center gaps per primitive pair, one dimension.
        p: total exponents per pair.
    """
    n_pairs = len(p)
    e = np.zeros((l_a + 1, l_b + 1, l_a + l_b + 2, n_pairs))
    e[0, 0, 0] = 1.0
    inv2p = 0.5 / p
    for i in range(1, l_a + 1):
        for t in range(i + 1):
            val = pa * e[i - 1, 0, t] + (t + 1) * e[i - 1, 0, t + 1]
            if t > 0:
                val = val + inv2p * e[i - 1, 0, t - 1]
            e[i, 0, t] = val
    for j in range(1, l_b + 1):
        for i in range(l_a + 1):
            for t in range(i + j + 1):
                val = pb * e[i, j - 1, t] + (t + 1) * e[i, j - 1, t + 1]
                if t > 0:
                    val = val + inv2p * e[i, j - 1, t - 1]
                e[i, j, t] = val
    return e


def hermite_coulomb(l_max: int, omega: np.ndarray, pq: np.ndarray) -> np.ndarray:
    """Hermite Coulomb tensor R[t, u, v, pair] with orders to l_max each.

    Args:
        l_max: maximum Hermite order per dimension.
        omega: reduced exponents per pair.
        pq: center gaps, shape (3, n_pairs).
    """
    n_top = 3 * l_max
    f = boys(n_top, omega * np.sum(pq * pq, axis=0))
    base = (-2.0 * omega) ** np.arange(n_top + 1)[:, None] * f
    r = np.zeros((n_top + 1, l_max + 1, l_max + 1, l_max + 1, omega.shape[0]))
    r[:, 0, 0, 0] = base
    for t in range(1, l_max + 1):
        for n in range(n_top - t + 1):
            val = pq[0] * r[n + 1, t - 1, 0, 0]
            if t > 1:
                val = val + (t - 1) * r[n + 1, t - 2, 0, 0]
            r[n, t, 0, 0] = val
    for u in range(1, l_max + 1):
        for t in range(l_max + 1):
            for n in range(n_top - t - u + 1):
                val = pq[1] * r[n + 1, t, u - 1, 0]
                if u > 1:
                    val = val + (u - 1) * r[n + 1, t, u - 2, 0]
                r[n, t, u, 0] = val
    for v in range(1, l_max + 1):
        for u in range(l_max + 1):
            for t in range(l_max + 1):
                for n in range(n_top - t - u - v + 1):
                    val = pq[2] * r[n + 1, t, u, v - 1]
                    if v > 1:
                        val = val + (v - 1) * r[n + 1, t, u, v - 2]
                    r[n, t, u, v] = val
    return r[0]


class _ShellPair:
    """Cached primitive-pair data for one ordered shell pair."""

    def __init__(self, sa: Shell, sb: Shell):
        self.sa = sa
        self.sb = sb
        a = sa.exponents[:, None]
        b = sb.exponents[None, :]
        self.p = (a + b).ravel()
        mu = (a * b / (a + b)).ravel()
        ab = sa.center - sb.center
        centers = (a[..., None] * sa.center + b[..., None] * sb.center) / (a + b)[..., None]
        self.pc = centers.reshape(-1, 3)
        self.coef = (sa.coefficients[:, None] * sb.coefficients[None, :]).ravel()
        self.prefactor = np.exp(-mu * float(ab @ ab))
        self.beta = np.broadcast_to(b, (len(sa.exponents), len(sb.exponents))).ravel()
        pa = self.pc - sa.center
        pb = self.pc - sb.center
        # two extra b columns serve the kinetic-energy assembly
        self.e = [
            hermite_expansion(sa.angmom, sb.angmom + 2, pa[:, d], pb[:, d], self.p)
            for d in range(3)
        ]
        self.l_herm = sa.angmom + sb.angmom
        self._weights: np.ndarray | None = None

    def hermite_weights(self) -> np.ndarray:
        """W[cart_a, cart_b, t, u, v, pair]; contraction and prefactor included."""
        if self._weights is not None:
            return self._weights
        pow_a = cartesian_powers(self.sa.angmom)
        pow_b = cartesian_powers(self.sb.angmom)
        lt = self.l_herm + 1
        w = np.zeros((len(pow_a), len(pow_b), lt, lt, lt, len(self.p)))
        scale = self.coef * self.prefactor
        for ia, (ax, ay, az) in enumerate(pow_a):
            for ib, (bx, by, bz) in enumerate(pow_b):
                ex = self.e[0][ax, bx]
                ey = self.e[1][ay, by]
                ez = self.e[2][az, bz]
                for t in range(ax + bx + 1):
                    for u in range(ay + by + 1):
                        for v in range(az + bz + 1):
                            w[ia, ib, t, u, v] = ex[t] * ey[u] * ez[v] * scale
        self._weights = w
        return w

    def overlap_1d(self, dim: int, i: int, j: int) -> np.ndarray:
        return self.e[dim][i, j, 0] * np.sqrt(np.pi / self.p)


def overlap_block(pair: _ShellPair) -> np.ndarray:
    pow_a = cartesian_powers(pair.sa.angmom)
    pow_b = cartesian_powers(pair.sb.angmom)
    out = np.zeros((len(pow_a), len(pow_b)))
    weights = pair.coef * pair.prefactor
    for ia, pa in enumerate(pow_a):
        for ib, pb in enumerate(pow_b):
            val = (pair.overlap_1d(0, pa[0], pb[0])
                   * pair.overlap_1d(1, pa[1], pb[1])
                   * pair.overlap_1d(2, pa[2], pb[2]))
            out[ia, ib] = float(np.sum(weights * val))
    return out


def kinetic_block(pair: _ShellPair) -> np.ndarray:
    pow_a = cartesian_powers(pair.sa.angmom)
    pow_b = cartesian_powers(pair.sb.angmom)
    out = np.zeros((len(pow_a), len(pow_b)))
    weights = pair.coef * pair.prefactor

    def t1d(dim: int, i: int, j: int) -> np.ndarray:
        term = pair.beta * (2 * j + 1) * pair.overlap_1d(dim, i, j)
        term = term - 2.0 * pair.beta**2 * pair.overlap_1d(dim, i, j + 2)
        if j >= 2:
            term = term - 0.5 * j * (j - 1) * pair.overlap_1d(dim, i, j - 2)
        return term

    for ia, pa in enumerate(pow_a):
        for ib, pb in enumerate(pow_b):
            s = [pair.overlap_1d(d, pa[d], pb[d]) for d in range(3)]
            t = [t1d(d, pa[d], pb[d]) for d in range(3)]
            val = t[0] * s[1] * s[2] + s[0] * t[1] * s[2] + s[0] * s[1] * t[2]
            out[ia, ib] = float(np.sum(weights * val))
    return out


def nuclear_block(pair: _ShellPair, charges: np.ndarray, coords: np.ndarray) -> np.ndarray:
    w = pair.hermite_weights() * (2.0 * np.pi / pair.p)
    out = np.zeros(w.shape[:2])
    for z, c in zip(charges, coords):
        pq = (pair.pc - c).T
        r = hermite_coulomb(pair.l_herm, pair.p, pq)
        out -= z * np.einsum("abtuvn,tuvn->ab", w, r)
    return out


def eri_block(bra: _ShellPair, ket: _ShellPair) -> np.ndarray:
    """(ab|cd) for two shell pairs, chemists' notation."""
    lb, lk = bra.l_herm, ket.l_herm
    wb = bra.hermite_weights()
    wk = ket.hermite_weights()
    n_b, n_k = len(bra.p), len(ket.p)
    pp = np.repeat(bra.p, n_k)
    qq = np.tile(ket.p, n_b)
    omega = pp * qq / (pp + qq)
    pq = (np.repeat(bra.pc, n_k, axis=0) - np.tile(ket.pc, (n_b, 1))).T
    pref = 2.0 * np.pi**2.5 / (pp * qq * np.sqrt(pp + qq))
    r = hermite_coulomb(lb + lk, omega, pq) * pref
    r = r.reshape(r.shape[:3] + (n_b, n_k))

    # R[t+x, u+y, v+z] regrouped as R6[t, x, u, y, v, z]
    r6 = np.zeros((lb + 1, lk + 1, lb + 1, lk + 1, lb + 1, lk + 1, n_b, n_k))
    for t in range(lb + 1):
        for x in range(lk + 1):
            for u in range(lb + 1):
                for y in range(lk + 1):
                    for v in range(lb + 1):
                        for z in range(lk + 1):
                            r6[t, x, u, y, v, z] = r[t + x, u + y, v + z]

    axes = np.arange(lk + 1)
    sign = (-1.0) ** (axes[:, None, None] + axes[None, :, None] + axes[None, None, :])
    ket_side = np.einsum("cdxyzk,txuyvznk->cdtuvn",
                         wk * sign[None, None, :, :, :, None], r6, optimize=True)
    return np.einsum("abtuvn,cdtuvn->abcd", wb, ket_side, optimize=True)


def build_integrals(shells: list[Shell], charges: np.ndarray, coords: np.ndarray):
    """Cartesian-basis S, T, V, ERI over all shells."""
    offsets = np.cumsum([0] + [s.n_cartesian for s in shells])
    n = int(offsets[-1])
    pairs = {}
    for i, sa in enumerate(shells):
        for j, sb in enumerate(shells):
            if i >= j:
                pairs[(i, j)] = _ShellPair(sa, sb)

    s_mat = np.zeros((n, n))
    t_mat = np.zeros((n, n))
    v_mat = np.zeros((n, n))
    for (i, j), pair in pairs.items():
        sl_i = slice(offsets[i], offsets[i + 1])
        sl_j = slice(offsets[j], offsets[j + 1])
        s_blk = overlap_block(pair)
        t_blk = kinetic_block(pair)
        v_blk = nuclear_block(pair, charges, coords)
        s_mat[sl_i, sl_j] = s_blk
        t_mat[sl_i, sl_j] = t_blk
        v_mat[sl_i, sl_j] = v_blk
        if i != j:
            s_mat[sl_j, sl_i] = s_blk.T
            t_mat[sl_j, sl_i] = t_blk.T
            v_mat[sl_j, sl_i] = v_blk.T

    eri = np.zeros((n, n, n, n))
    pair_keys = sorted(pairs)
    for idx, key_b in enumerate(pair_keys):
        for key_k in pair_keys[: idx + 1]:
            block = eri_block(pairs[key_b], pairs[key_k])
            _scatter_eri(eri, offsets, key_b, key_k, block)
    return s_mat, t_mat, v_mat, eri


def _scatter_eri(eri, offsets, key_b, key_k, block):
    i, j = key_b
    k, l = key_k
    si = slice(offsets[i], offsets[i + 1])
    sj = slice(offsets[j], offsets[j + 1])
    sk = slice(offsets[k], offsets[k + 1])
    sl = slice(offsets[l], offsets[l + 1])
    eri[si, sj, sk, sl] = block
    eri[sj, si, sk, sl] = block.transpose(1, 0, 2, 3)
    eri[si, sj, sl, sk] = block.transpose(0, 1, 3, 2)
    eri[sj, si, sl, sk] = block.transpose(1, 0, 3, 2)
    eri[sk, sl, si, sj] = block.transpose(2, 3, 0, 1)
    eri[sl, sk, si, sj] = block.transpose(3, 2, 0, 1)
    eri[sk, sl, sj, si] = block.transpose(2, 3, 1, 0)
    eri[sl, sk, sj, si] = block.transpose(3, 2, 1, 0)


_SPHERICAL_D = np.array([
    # xx     xy     xz     yy     yz     zz
    [0.0,   1.0,   0.0,   0.0,   0.0,   0.0],   # xy
    [0.0,   0.0,   0.0,   0.0,   1.0,   0.0],   # yz
    [-0.5,  0.0,   0.0,  -0.5,   0.0,   1.0],   # zz - (xx + yy)/2
    [0.0,   0.0,   1.0,   0.0,   0.0,   0.0],   # xz
    [1.0,   0.0,   0.0,  -1.0,   0.0,   0.0],   # xx - yy
])


def spherical_map(shells: list[Shell]) -> np.ndarray:
    """Block-diagonal Cartesian-to-spherical map W[n_sph, n_cart]."""
    blocks = []
    for shell in shells:
        if shell.angmom < 2:
            blocks.append(np.eye(shell.n_cartesian))
        elif shell.angmom == 2:
            blocks.append(_SPHERICAL_D)
        else:
            raise ValueError("angular momentum above d is not supported")
    n_cart = sum(b.shape[1] for b in blocks)
    n_sph = sum(b.shape[0] for b in blocks)
    w = np.zeros((n_sph, n_cart))
    r0 = c0 = 0
    for b in blocks:
        w[r0:r0 + b.shape[0], c0:c0 + b.shape[1]] = b
        r0 += b.shape[0]
        c0 += b.shape[1]
    return w


def assemble_ao_integrals(shells: list[Shell], charges: np.ndarray,
                          coords: np.ndarray):
    """Normalized spherical-AO S, T, V, ERI for a shell list."""
    s_c, t_c, v_c, eri_c = build_integrals(shells, charges, coords)
    w = spherical_map(shells)
    s = w @ s_c @ w.T
    t = w @ t_c @ w.T
    v = w @ v_c @ w.T
    eri = np.einsum("pi,qj,rk,sl,ijkl->pqrs", w, w, w, w, eri_c, optimize=True)
    scale = 1.0 / np.sqrt(np.diag(s))
    s = s * scale[:, None] * scale[None, :]
    t = t * scale[:, None] * scale[None, :]
    v = v * scale[:, None] * scale[None, :]
    eri = np.einsum("p,q,r,s,pqrs->pqrs", scale, scale, scale, scale, eri,
                    optimize=True)
    return s, t, v, eri
