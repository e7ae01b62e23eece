"""Dynamical-correlation corrections from active-space reduced densities.

The reference is an active-space wavefunction (exact CAS or ansatz-based)
described solely by its spin-summed active 1-/2-RDMs.  A one-parameter
family of Hamiltonians

    H(alpha) = H0 + alpha (H - H0)

connects a Dyall-style zeroth order H0 (mean-field inactive and virtual
blocks, the full dressed Hamiltonian inside the active space) to the
physical H.  Extended-RPA eigenproblems built from double-commutator
contractions against the fixed reference RDMs give transition densities at
each alpha; integrating the resulting pair-correlation change over alpha
yields the missing correlation energy, and a first-order (perturbative)
evaluation of the same object gives the cheaper one-shot correction.

All tensors use chemists' notation and spin-summed operators throughout;
everything is evaluated in the natural-orbital basis of the active 1-RDM,
where the excitation-pair metric is diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .contractions import commutator_metric, double_commutator
from .integrals import ActiveSpace, IntegralSet, apply_orbital_rotation, embed_active_space
from .rdm import expand_rdms

__all__ = [
    "Ac0Result",
    "AcResult",
    "ErpaInstabilityError",
    "ErpaSolution",
    "PairBasis",
    "ac0_correction",
    "ac_correction",
    "correlation_pair_tensor",
    "erpa_matrices",
    "erpa_pair_basis",
    "mean_field_fock",
    "natural_occupations",
    "natural_orbital_frame",
    "solve_erpa",
    "transition_densities",
    "zeroth_order_hamiltonian",
]

BLOCK_LABELS = ("aa", "ai", "va", "vi")


class ErpaInstabilityError(RuntimeError):
    """Raised when an extended-RPA eigenproblem has complex frequencies."""


def natural_occupations(d_act: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the active 1-RDM.

    Returns:
        (occupations, w): occupations sorted in descending order and the
        orthogonal matrix whose columns are the natural orbitals in that
        order, each column's largest-magnitude entry made positive.
    """
    vals, vecs = np.linalg.eigh(0.5 * (d_act + d_act.T))
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[k, j] < 0.0:
            vecs[:, j] = -vecs[:, j]
    return vals, vecs


@dataclass
class NaturalFrame:
    """Integrals and active RDMs rotated to the active natural-orbital basis."""

    ints: IntegralSet
    rotation: np.ndarray
    d_act: np.ndarray
    p_act: np.ndarray
    occupations: np.ndarray


def natural_orbital_frame(
    ints: IntegralSet, cas: ActiveSpace, d_act: np.ndarray, p_act: np.ndarray
) -> NaturalFrame:
    """Rotate the full-space integrals and the active RDMs so the active
    1-RDM is diagonal; inactive and virtual orbitals are untouched."""
    occ, w = natural_occupations(d_act)
    n = ints.n_orb
    u = np.eye(n)
    active = np.asarray(cas.active, dtype=np.int64)
    if active.size:
        u[np.ix_(active, active)] = w
    rotated = apply_orbital_rotation(ints, u)
    d_no = w.T @ d_act @ w
    p_no = np.einsum("pa,qb,rc,sd,pqrs->abcd", w, w, w, w, p_act, optimize=True)
    return NaturalFrame(rotated, u, d_no, p_no, occ)


def mean_field_fock(h: np.ndarray, v: np.ndarray, dmat: np.ndarray) -> np.ndarray:
    """Closed-shell-convention Fock matrix of a (possibly fractional) 1-RDM:
    F = h + J[D] - K[D]/2 in chemists' notation."""
    j = np.einsum("pqrs,rs->pq", v, dmat, optimize=True)
    k = np.einsum("psrq,rs->pq", v, dmat, optimize=True)
    return h + j - 0.5 * k


def zeroth_order_hamiltonian(
    ints: IntegralSet, cas: ActiveSpace, dmat: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Block-diagonal zeroth order (f0, v0) for the alpha interpolation.

    The inactive-inactive and virtual-virtual blocks of f0 carry the
    mean-field Fock of the full reference density, the active block carries
    the core-dressed one-electron matrix, and v0 keeps only the all-active
    two-electron integrals.  The reference state (closed core times active
    eigenvector) is an eigenstate of the resulting operator.
    """
    n = ints.n_orb
    f = mean_field_fock(ints.h, ints.v, dmat)
    f0 = np.zeros((n, n))
    ina = np.asarray(cas.inactive, dtype=np.int64)
    act = np.asarray(cas.active, dtype=np.int64)
    vir = np.asarray(cas.virtual, dtype=np.int64)
    if ina.size:
        f0[np.ix_(ina, ina)] = f[np.ix_(ina, ina)]
    if vir.size:
        f0[np.ix_(vir, vir)] = f[np.ix_(vir, vir)]
    if act.size:
        f0[np.ix_(act, act)] = embed_active_space(ints, cas).h_eff
    v0 = np.zeros_like(ints.v)
    if act.size:
        v0[np.ix_(act, act, act, act)] = ints.v[np.ix_(act, act, act, act)]
    return f0, v0


@dataclass
class PairBasis:
    """Ordered excitation pairs (p, q), p != q, with block labels.

    Pairs whose orbital occupations differ by less than the tolerance carry
    a singular metric and are excluded up front; both orders of every kept
    pair are present, so the reversal permutation is total.
    """

    pairs: list[tuple[int, int]]
    labels: list[str]
    occupations: np.ndarray
    discarded: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.p_idx = np.array([p for p, _ in self.pairs], dtype=np.int64)
        self.q_idx = np.array([q for _, q in self.pairs], dtype=np.int64)
        lookup = {pq: i for i, pq in enumerate(self.pairs)}
        self.reverse = np.array(
            [lookup[(q, p)] for p, q in self.pairs], dtype=np.int64
        )

    @property
    def size(self) -> int:
        return len(self.pairs)

    def block_indices(self, label: str) -> np.ndarray:
        return np.array(
            [i for i, lb in enumerate(self.labels) if lb == label], dtype=np.int64
        )

    def gather(self, tensor: np.ndarray) -> np.ndarray:
        """Pair-matrix view A[I, J] = tensor[p_I, q_I, q_J, p_J]."""
        p, q = self.p_idx, self.q_idx
        return tensor[p[:, None], q[:, None], q[None, :], p[None, :]]


_PAIR_LABEL = {
    frozenset((1,)): "aa",
    frozenset((0, 1)): "ai",
    frozenset((1, 2)): "va",
    frozenset((0, 2)): "vi",
}


def erpa_pair_basis(
    occupations: np.ndarray, kinds: np.ndarray, tol: float = 1e-6
) -> PairBasis:
    """All ordered orbital pairs with a non-singular metric, block-labeled.

    Intra-inactive and intra-virtual pairs always have equal occupations and
    drop out automatically; active pairs with accidentally equal natural
    occupations are recorded in ``discarded``.
    """
    n = len(occupations)
    pairs: list[tuple[int, int]] = []
    labels: list[str] = []
    discarded: list[tuple[int, int]] = []
    for p in range(n):
        for q in range(n):
            if p == q:
                continue
            label = _PAIR_LABEL.get(frozenset((int(kinds[p]), int(kinds[q]))))
            if label is None:
                continue
            if abs(occupations[p] - occupations[q]) < tol:
                discarded.append((p, q))
                continue
            pairs.append((p, q))
            labels.append(label)
    return PairBasis(pairs, labels, np.asarray(occupations, dtype=float), discarded)


def erpa_matrices(
    h: np.ndarray,
    v: np.ndarray,
    dmat: np.ndarray,
    pmat: np.ndarray,
    basis: PairBasis,
) -> tuple[np.ndarray, np.ndarray]:
    """Extended-RPA main matrix and metric over the pair basis.

    M[I, J] = symmetrized <[E_{q_I p_I}, [H, E_{p_J q_J}]]> and
    N[I, J] = <[E_{q_I p_I}, E_{p_J q_J}]>.
    """
    dcs = double_commutator(h, v, dmat, pmat, symmetrized=True)
    nc = commutator_metric(dmat)
    p, q = basis.p_idx, basis.q_idx
    m = dcs[q[:, None], p[:, None], p[None, :], q[None, :]]
    metric = nc[q[:, None], p[:, None], p[None, :], q[None, :]]
    return m, metric


@dataclass
class ErpaSolution:
    """All eigenpairs of M c = omega N c, sorted by ascending frequency.

    Vectors are metric-normalized to |c^T N c| = 1 where possible;
    ``signatures`` holds the sign of c^T N c, or 0 for (excluded)
    metric-null vectors.
    """

    omegas: np.ndarray
    vectors: np.ndarray
    signatures: np.ndarray

    @property
    def n_null(self) -> int:
        return int(np.count_nonzero(self.signatures == 0))

    def positive(self, tol: float = 1e-8) -> np.ndarray:
        """Indices of retained solutions: positive frequency, +1 metric norm."""
        return np.flatnonzero((self.omegas > tol) & (self.signatures > 0))


def solve_erpa(
    m: np.ndarray,
    metric: np.ndarray,
    imag_tol: float = 1e-8,
    null_tol: float = 1e-10,
    cluster_tol: float = 1e-8,
) -> ErpaSolution:
    """Solve the metric eigenproblem and normalize against the metric.

    Degenerate frequency clusters are metric-orthogonalized; without this
    the eigensolver's arbitrary basis inside a cluster leaks into every
    downstream contraction and breaks orbital-rotation invariance.

    Raises:
        ErpaInstabilityError: if any frequency has an imaginary part larger
            than ``imag_tol``, which signals an unstable reference for the
            pair space at hand.
    """
    if m.size == 0:
        return ErpaSolution(np.zeros(0), np.zeros((0, 0)), np.zeros(0))
    w, c = scipy.linalg.eig(m, metric)
    max_imag = float(np.abs(w.imag).max())
    if max_imag > imag_tol:
        raise ErpaInstabilityError(
            f"complex pair frequencies (max imaginary part {max_imag:.3e})"
        )
    w = w.real
    c = c.real
    order = np.argsort(w, kind="stable")
    w = w[order]
    c = c[:, order]
    sig = np.zeros(len(w))
    for j in range(len(w)):
        s = float(c[:, j] @ metric @ c[:, j])
        if abs(s) < null_tol:
            continue
        c[:, j] /= np.sqrt(abs(s))
        sig[j] = np.sign(s)
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and abs(w[stop] - w[start]) <= cluster_tol:
            stop += 1
        for b in range(start + 1, stop):
            for a in range(start, b):
                if sig[a] == 0.0:
                    continue
                c[:, b] -= sig[a] * float(c[:, a] @ metric @ c[:, b]) * c[:, a]
            s = float(c[:, b] @ metric @ c[:, b])
            if abs(s) < null_tol:
                sig[b] = 0.0
                continue
            c[:, b] /= np.sqrt(abs(s))
            sig[b] = np.sign(s)
        start = stop
    return ErpaSolution(w, c, sig)


def transition_densities(basis: PairBasis, vectors: np.ndarray) -> np.ndarray:
    """Pair-vector transition densities x[I, nu] = <0|E_{p_I q_I}|nu>.

    In the natural basis the metric is diagonal, so the density of pair I is
    the occupation difference times the coefficient of the reversed pair.
    """
    occ = basis.occupations
    dn = occ[basis.p_idx] - occ[basis.q_idx]
    return dn[:, None] * vectors[basis.reverse, :]


def correlation_pair_tensor(basis: PairBasis, x: np.ndarray) -> np.ndarray:
    """Orbital-index tensor T[p,q,r,s] = sum_nu x_pq^nu x_sr^nu from pair
    vectors; models <E_pq E_rs> summed over the retained states."""
    n = len(basis.occupations)
    t = np.zeros((n, n, n, n))
    p, q = basis.p_idx, basis.q_idx
    t[p[:, None], q[:, None], q[None, :], p[None, :]] = x @ x.T
    return t


@dataclass
class _Frame:
    """Shared preparation for both corrections, in the natural basis."""

    ints: IntegralSet
    dmat: np.ndarray
    pmat: np.ndarray
    basis: PairBasis
    f0: np.ndarray
    v0: np.ndarray
    vprime: np.ndarray
    rotation: np.ndarray


def _prepare(ints, cas, d_act, p_act, pair_tol) -> _Frame:
    nat = natural_orbital_frame(ints, cas, d_act, p_act)
    dmat, pmat = expand_rdms(cas, nat.d_act, nat.p_act)
    f0, v0 = zeroth_order_hamiltonian(nat.ints, cas, dmat)
    kinds = cas.classes(ints.n_orb)
    basis = erpa_pair_basis(np.diag(dmat), kinds, pair_tol)
    return _Frame(
        nat.ints, dmat, pmat, basis, f0, v0, nat.ints.v - v0, nat.rotation
    )


@dataclass
class Ac0Result:
    """One-shot perturbative correction, accumulated block by block."""

    e_corr: float
    blocks: dict[str, float]
    skipped_blocks: tuple[str, ...] = ()
    discarded_pairs: tuple[tuple[int, int], ...] = ()
    n_null_vectors: int = 0
    method: str = "ac0"


def ac0_correction(
    ints: IntegralSet,
    cas: ActiveSpace,
    d_act: np.ndarray,
    p_act: np.ndarray,
    pair_tol: float = 1e-6,
    degeneracy_tol: float = 1e-8,
    positive_tol: float = 1e-8,
    imag_tol: float = 1e-8,
    null_tol: float = 1e-10,
) -> Ac0Result:
    """First-order-in-alpha correlation correction from the reference RDMs.

    Each pair block is solved at alpha = 0 and perturbed by the
    block-restricted first-order matrix; second-order frequency denominators
    weight the induced pair-density change against the double-counting-free
    interaction.  Blocks with an unstable zeroth-order problem are skipped
    and reported instead of aborting.
    """
    frame = _prepare(ints, cas, d_act, p_act, pair_tol)
    m0, metric = erpa_matrices(frame.f0, frame.v0, frame.dmat, frame.pmat, frame.basis)
    m1, _ = erpa_matrices(frame.ints.h, frame.ints.v, frame.dmat, frame.pmat, frame.basis)
    mprime = m1 - m0
    vhat = frame.basis.gather(frame.vprime)

    blocks: dict[str, float] = {}
    skipped: list[str] = []
    n_null = 0
    for label in BLOCK_LABELS:
        idx = frame.basis.block_indices(label)
        if idx.size == 0:
            continue
        sub = np.ix_(idx, idx)
        try:
            sol = solve_erpa(m0[sub], metric[sub], imag_tol, null_tol)
        except ErpaInstabilityError:
            skipped.append(label)
            continue
        n_null += sol.n_null
        sub_basis_x = _block_densities(frame.basis, idx, sol.vectors)
        a = sol.vectors.T @ mprime[sub] @ sol.vectors
        g = sub_basis_x.T @ vhat[sub] @ sub_basis_x
        gsym = g + g.T
        pos = sol.positive(positive_tol)
        kept = np.flatnonzero(sol.signatures != 0)
        e_block = 0.0
        for nu in pos:
            denom = sol.omegas[nu] - sol.omegas[kept]
            ok = np.abs(denom) > degeneracy_tol
            mu = kept[ok]
            e_block += 0.25 * float(
                np.sum(sol.signatures[mu] * a[mu, nu] * gsym[mu, nu] / denom[ok])
            )
        blocks[label] = e_block
    return Ac0Result(
        e_corr=float(sum(blocks.values())),
        blocks=blocks,
        skipped_blocks=tuple(skipped),
        discarded_pairs=tuple(frame.basis.discarded),
        n_null_vectors=n_null,
    )


def _block_densities(basis: PairBasis, idx: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Transition densities for a block-restricted solve.

    Every block is closed under pair reversal, so the reversal permutation
    restricted to the block is total.
    """
    occ = basis.occupations
    p = basis.p_idx[idx]
    q = basis.q_idx[idx]
    pos_in_block = {int(g): l for l, g in enumerate(idx)}
    rev = np.array([pos_in_block[int(basis.reverse[g])] for g in idx], dtype=np.int64)
    dn = occ[p] - occ[q]
    return dn[:, None] * vectors[rev, :]


@dataclass
class AcResult:
    """Quadrature-integrated correction along the alpha connection."""

    e_corr: float
    blocks: dict[str, float]
    nodes: np.ndarray
    weights: np.ndarray
    integrand: np.ndarray
    discarded_pairs: tuple[tuple[int, int], ...] = ()
    n_null_vectors: int = 0
    method: str = "ac"


def ac_correction(
    ints: IntegralSet,
    cas: ActiveSpace,
    d_act: np.ndarray,
    p_act: np.ndarray,
    n_nodes: int = 5,
    pair_tol: float = 1e-6,
    positive_tol: float = 1e-8,
    imag_tol: float = 1e-8,
    null_tol: float = 1e-10,
) -> AcResult:
    """Correlation energy integrated over the full coupling connection.

    At every Gauss-Legendre node the full-space pair problem is solved at
    the interpolated Hamiltonian; the integrand is the interaction-weighted
    change of the pair-correlation tensor relative to alpha = 0.  An
    instability at any node aborts with ErpaInstabilityError since the
    integral is then undefined.
    """
    frame = _prepare(ints, cas, d_act, p_act, pair_tol)
    m0, metric = erpa_matrices(frame.f0, frame.v0, frame.dmat, frame.pmat, frame.basis)
    m1, _ = erpa_matrices(frame.ints.h, frame.ints.v, frame.dmat, frame.pmat, frame.basis)
    mprime = m1 - m0
    vhat = frame.basis.gather(frame.vprime)
    labels = np.asarray(frame.basis.labels)

    sol0 = solve_erpa(m0, metric, imag_tol, null_tol)
    x0 = transition_densities(frame.basis, sol0.vectors[:, sol0.positive(positive_tol)])
    n_null = sol0.n_null

    t, wt = np.polynomial.legendre.leggauss(n_nodes)
    nodes = 0.5 * (t + 1.0)
    weights = 0.5 * wt

    integrand = np.zeros(n_nodes)
    block_sums = {label: 0.0 for label in BLOCK_LABELS}
    base_total, base_blocks = _weighted_pair_energy(vhat, x0, labels)
    for k, alpha in enumerate(nodes):
        sol = solve_erpa(m0 + alpha * mprime, metric, imag_tol, null_tol)
        n_null += sol.n_null
        x = transition_densities(frame.basis, sol.vectors[:, sol.positive(positive_tol)])
        total, per_block = _weighted_pair_energy(vhat, x, labels)
        integrand[k] = total - base_total
        for label in BLOCK_LABELS:
            block_sums[label] += weights[k] * (per_block[label] - base_blocks[label])
    e_corr = float(np.dot(weights, integrand))
    blocks = {
        label: value
        for label, value in block_sums.items()
        if np.any(labels == label)
    }
    return AcResult(
        e_corr=e_corr,
        blocks=blocks,
        nodes=nodes,
        weights=weights,
        integrand=integrand,
        discarded_pairs=tuple(frame.basis.discarded),
        n_null_vectors=n_null,
        method=f"ac(gauss-legendre-{n_nodes})",
    )


def _weighted_pair_energy(vhat, x, labels) -> tuple[float, dict[str, float]]:
    """1/2 sum_nu x^T vhat x and its per-block attribution.

    The block share is the symmetric half-half split, so the shares add up
    to the total exactly.
    """
    vx = vhat @ x
    total = 0.5 * float(np.sum(x * vx))
    per_block: dict[str, float] = {}
    xtv = vhat.T @ x
    for label in BLOCK_LABELS:
        mask = labels == label
        if not np.any(mask):
            per_block[label] = 0.0
            continue
        share = 0.25 * float(np.sum(x[mask] * vx[mask])) + 0.25 * float(
            np.sum(x[mask] * xtv[mask])
        )
        per_block[label] = share
    return total, per_block
