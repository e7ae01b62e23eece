"""Second-quantized operators and qubit mappings.

Fermionic operators are sparse sums of products of creation/annihilation
operators on spin orbitals.  Spin orbitals interleave spin within spatial
orbitals: spatial orbital p contributes alpha at mode 2p and beta at
mode 2p + 1.

Pauli sums store each tensor-product term as a pair of bit masks (x, z) over
qubits: bit q set in x only is an X on qubit q, in z only a Z, in both a Y.
Qubit q corresponds to fermionic mode q and to bit q (LSB = qubit 0) of the
statevector basis index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FermionOperator",
    "PauliSum",
    "alpha",
    "beta",
    "creation",
    "annihilation",
    "excitation",
    "hamiltonian_to_fermion",
    "jordan_wigner",
    "parity_mapping",
    "map_operator",
    "hamiltonian_to_pauli",
]

PRUNE_TOL = 1e-12

_I_POW = (1.0, 1.0j, -1.0, -1.0j)


def alpha(p: int) -> int:
    """Spin-orbital mode of the alpha electron in spatial orbital p."""
    return 2 * p


def beta(p: int) -> int:
    """Spin-orbital mode of the beta electron in spatial orbital p."""
    return 2 * p + 1


class FermionOperator:
    """Sparse linear combination of products of ladder operators.

    Terms map tuples of (mode, is_creation) factors, applied left to right
    as written, to complex coefficients.  The empty tuple is the identity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[tuple[int, int], ...], complex] | None = None):
        self.terms = dict(terms) if terms else {}

    @staticmethod
    def from_term(factors: tuple[tuple[int, int], ...], coeff: complex = 1.0) -> "FermionOperator":
        return FermionOperator({tuple(factors): complex(coeff)})

    @staticmethod
    def identity(coeff: complex = 1.0) -> "FermionOperator":
        return FermionOperator({(): complex(coeff)})

    def copy(self) -> "FermionOperator":
        return FermionOperator(self.terms)

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0.0) + c
        return FermionOperator(out)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, FermionOperator):
            out: dict = {}
            for t1, c1 in self.terms.items():
                for t2, c2 in other.terms.items():
                    t = t1 + t2
                    out[t] = out.get(t, 0.0) + c1 * c2
            return FermionOperator(out)
        return FermionOperator({t: c * other for t, c in self.terms.items()})

    def __rmul__(self, scalar) -> "FermionOperator":
        return self.__mul__(scalar)

    def __neg__(self) -> "FermionOperator":
        return self.__mul__(-1.0)

    def dagger(self) -> "FermionOperator":
        """Hermitian conjugate: reverse factor order, flip dagger flags."""
        out: dict = {}
        for t, c in self.terms.items():
            td = tuple((mode, 1 - dag) for mode, dag in reversed(t))
            out[td] = out.get(td, 0.0) + np.conj(c)
        return FermionOperator(out)

    def prune(self, tol: float = PRUNE_TOL) -> "FermionOperator":
        return FermionOperator({t: c for t, c in self.terms.items() if abs(c) > tol})

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def max_mode(self) -> int:
        """Highest mode index appearing in any factor (-1 if scalar only)."""
        modes = [m for t in self.terms for m, _ in t]
        return max(modes) if modes else -1

    def normal_order(self, tol: float = PRUNE_TOL) -> "FermionOperator":
        """Rewrite with creators (descending modes) left of annihilators
        (ascending modes), generating anticommutator contractions.
        """
        out: dict = {}
        stack = [(t, c) for t, c in self.terms.items()]
        while stack:
            term, coeff = stack.pop()
            if abs(coeff) <= tol:
                continue
            for i in range(len(term) - 1):
                (m1, d1), (m2, d2) = term[i], term[i + 1]
                if d1 == 0 and d2 == 1:
                    # a_m1 adag_m2 = delta - adag_m2 a_m1
                    swapped = term[:i] + ((m2, 1), (m1, 0)) + term[i + 2:]
                    stack.append((swapped, -coeff))
                    if m1 == m2:
                        stack.append((term[:i] + term[i + 2:], coeff))
                    break
                if d1 == d2 and m1 == m2:
                    break  # repeated ladder operator annihilates the term
                if d1 == d2 == 1 and m1 < m2:
                    swapped = term[:i] + ((m2, 1), (m1, 1)) + term[i + 2:]
                    stack.append((swapped, -coeff))
                    break
                if d1 == d2 == 0 and m1 > m2:
                    swapped = term[:i] + ((m2, 0), (m1, 0)) + term[i + 2:]
                    stack.append((swapped, -coeff))
                    break
            else:
                out[term] = out.get(term, 0.0) + coeff
        return FermionOperator({t: c for t, c in out.items() if abs(c) > tol})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        diff = (self - self.dagger()).normal_order()
        return all(abs(c) <= tol for c in diff.terms.values())

    def __repr__(self) -> str:
        if not self.terms:
            return "FermionOperator(0)"
        parts = []
        for t, c in list(self.terms.items())[:8]:
            ops = " ".join(f"a{'+' if d else ''}_{m}" for m, d in t) or "1"
            parts.append(f"({c:.6g}) {ops}")
        more = " ..." if len(self.terms) > 8 else ""
        return "FermionOperator(" + " + ".join(parts) + more + ")"


def creation(mode: int) -> FermionOperator:
    return FermionOperator.from_term(((mode, 1),))


def annihilation(mode: int) -> FermionOperator:
    return FermionOperator.from_term(((mode, 0),))


def excitation(p: int, q: int) -> FermionOperator:
    """Spin-summed one-body excitation between spatial orbitals, E_pq."""
    terms = {
        ((alpha(p), 1), (alpha(q), 0)): 1.0 + 0.0j,
        ((beta(p), 1), (beta(q), 0)): 1.0 + 0.0j,
    }
    return FermionOperator(terms)


def hamiltonian_to_fermion(
    e_core: float, h: np.ndarray, v: np.ndarray, tol: float = PRUNE_TOL
) -> FermionOperator:
    """Second-quantized Hamiltonian from spatial-orbital integrals.

    H = e_core + sum_pq h[p,q] E_pq
        + 1/2 sum_pqrs (pq|rs) sum_st adag_ps adag_rt a_st a_qs
    with s, t spin labels; two-electron part written directly in the
    creator-creator-annihilator-annihilator order.
    """
    n = h.shape[0]
    terms: dict = {}
    if abs(e_core) > tol:
        terms[()] = complex(e_core)
    for p in range(n):
        for q in range(n):
            c = h[p, q]
            if abs(c) <= tol:
                continue
            for so in (alpha, beta):
                t = ((so(p), 1), (so(q), 0))
                terms[t] = terms.get(t, 0.0) + c
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    c = 0.5 * v[p, q, r, s]
                    if abs(c) <= tol:
                        continue
                    for s1 in (alpha, beta):
                        for s2 in (alpha, beta):
                            t = ((s1(p), 1), (s2(r), 1), (s2(s), 0), (s1(q), 0))
                            terms[t] = terms.get(t, 0.0) + c
    return FermionOperator({t: c for t, c in terms.items() if abs(c) > tol})


@dataclass
class PauliSum:
    """Sparse sum of Pauli tensor-product terms over n_qubits qubits.

    Terms map (x_mask, z_mask) pairs to complex coefficients; the masks
    encode the literal Pauli letters (X for x-only bits, Z for z-only,
    Y for both).  The empty masks (0, 0) are the identity.
    """

    n_qubits: int
    terms: dict[tuple[int, int], complex] = field(default_factory=dict)

    @staticmethod
    def identity(n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return PauliSum(n_qubits, {(0, 0): complex(coeff)})

    @staticmethod
    def from_letters(n_qubits: int, letters: dict[int, str], coeff: complex = 1.0) -> "PauliSum":
        """Build a single term from {qubit: 'X'|'Y'|'Z'} assignments."""
        x = z = 0
        for q, letter in letters.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range")
            if letter == "X":
                x |= 1 << q
            elif letter == "Y":
                x |= 1 << q
                z |= 1 << q
            elif letter == "Z":
                z |= 1 << q
            else:
                raise ValueError(f"unknown Pauli letter {letter!r}")
        return PauliSum(n_qubits, {(x, z): complex(coeff)})

    def copy(self) -> "PauliSum":
        return PauliSum(self.n_qubits, dict(self.terms))

    def _check_compatible(self, other: "PauliSum") -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError(f"qubit counts differ: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check_compatible(other)
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0.0) + c
        return PauliSum(self.n_qubits, out)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            self._check_compatible(other)
            out: dict = {}
            for (x1, z1), c1 in self.terms.items():
                for (x2, z2), c2 in other.terms.items():
                    x = x1 ^ x2
                    z = z1 ^ z2
                    k = ((x1 & z1).bit_count() + (x2 & z2).bit_count()
                         - (x & z).bit_count() + 2 * (z1 & x2).bit_count()) % 4
                    key = (x, z)
                    out[key] = out.get(key, 0.0) + c1 * c2 * _I_POW[k]
            return PauliSum(self.n_qubits, out)
        return PauliSum(self.n_qubits, {t: c * other for t, c in self.terms.items()})

    def __rmul__(self, scalar) -> "PauliSum":
        return self.__mul__(scalar)

    def __neg__(self) -> "PauliSum":
        return self.__mul__(-1.0)

    def prune(self, tol: float = PRUNE_TOL) -> "PauliSum":
        return PauliSum(self.n_qubits, {t: c for t, c in self.terms.items() if abs(c) > tol})

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def weights(self) -> list[int]:
        """Number of non-identity letters in each term (sorted term order)."""
        return [(x | z).bit_count() for (x, z) in self.sorted_terms()[0]]

    def sorted_terms(self) -> tuple[list[tuple[int, int]], np.ndarray]:
        """Deterministic term ordering: identity first, then by (z, x) masks."""
        keys = sorted(self.terms.keys(), key=lambda t: ((t[0] | t[1]).bit_count(), t[1], t[0]))
        coeffs = np.array([self.terms[k] for k in keys], dtype=np.complex128)
        return keys, coeffs

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Mask/coefficient arrays in deterministic order for the kernels."""
        keys, coeffs = self.sorted_terms()
        x = np.array([k[0] for k in keys], dtype=np.uint64)
        z = np.array([k[1] for k in keys], dtype=np.uint64)
        return x, z, coeffs

    def to_dense(self) -> np.ndarray:
        """Dense matrix in the computational basis (small systems only)."""
        n = self.n_qubits
        if n > 14:
            raise ValueError(f"dense matrix for {n} qubits refused")
        dim = 1 << n
        mat = np.zeros((dim, dim), dtype=np.complex128)
        cols = np.arange(dim, dtype=np.int64)
        for (x, z), c in self.terms.items():
            rows = cols ^ x
            mat[rows, cols] += c * _pauli_action_phase(x, z, cols)
        return mat

    def term_strings(self) -> list[str]:
        out = []
        for x, z in self.sorted_terms()[0]:
            if not (x | z):
                out.append("I")
                continue
            letters = []
            for q in range(self.n_qubits):
                bit = 1 << q
                if x & bit and z & bit:
                    letters.append(f"Y{q}")
                elif x & bit:
                    letters.append(f"X{q}")
                elif z & bit:
                    letters.append(f"Z{q}")
            out.append(" ".join(letters))
        return out

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={self.n_terms})"


def _popcount_array(arr: np.ndarray) -> np.ndarray:
    """Vectorized popcount for int64 arrays."""
    out = np.zeros_like(arr)
    work = arr.copy()
    while np.any(work):
        out += work & 1
        work >>= 1
    return out


def _pauli_action_phase(x: int, z: int, basis: np.ndarray) -> np.ndarray:
    """Phase of P|b> = phase * |b ^ x> for the term (x, z) on basis ints."""
    ny = (x & z).bit_count()
    parity = _popcount_array(basis & np.int64(z)) & 1
    return _I_POW[ny % 4] * np.where(parity, -1.0, 1.0)


def _jw_ladder(mode: int, n_qubits: int, dagger: bool) -> PauliSum:
    chain = (1 << mode) - 1
    m = 1 << mode
    y_coeff = -0.5j if dagger else 0.5j
    return PauliSum(n_qubits, {
        (m, chain): 0.5 + 0.0j,
        (m, m | chain): complex(y_coeff),
    })


def jordan_wigner(op: FermionOperator, n_qubits: int | None = None) -> PauliSum:
    """Map a fermionic operator to qubits, one qubit per mode.

    Qubit q stores the occupation of mode q; a ladder operator on mode m
    carries a Z string over all lower modes.
    """
    if n_qubits is None:
        n_qubits = op.max_mode() + 1
    cache: dict[tuple[int, int], PauliSum] = {}

    def ladder(mode: int, dag: int) -> PauliSum:
        key = (mode, dag)
        if key not in cache:
            if mode >= n_qubits:
                raise ValueError(f"mode {mode} exceeds qubit count {n_qubits}")
            cache[key] = _jw_ladder(mode, n_qubits, bool(dag))
        return cache[key]

    return _map_terms(op, n_qubits, ladder)


def _parity_ladder(mode: int, n_qubits: int, dagger: bool) -> PauliSum:
    above = ((1 << n_qubits) - 1) & ~((1 << (mode + 1)) - 1)
    m = 1 << mode
    below = (1 << (mode - 1)) if mode > 0 else 0
    y_coeff = -0.5j if dagger else 0.5j
    return PauliSum(n_qubits, {
        (above | m, below): 0.5 + 0.0j,
        (above | m, m): complex(y_coeff),
    })


def parity_mapping(op: FermionOperator, n_qubits: int) -> PauliSum:
    """Map a fermionic operator to qubits in the parity encoding.

    Qubit j stores the running parity of occupations of modes 0..j; a ladder
    operator on mode m flips all qubits at and above m, with the local phase
    read from qubit m - 1.
    """
    cache: dict[tuple[int, int], PauliSum] = {}

    def ladder(mode: int, dag: int) -> PauliSum:
        key = (mode, dag)
        if key not in cache:
            if mode >= n_qubits:
                raise ValueError(f"mode {mode} exceeds qubit count {n_qubits}")
            cache[key] = _parity_ladder(mode, n_qubits, bool(dag))
        return cache[key]

    return _map_terms(op, n_qubits, ladder)


def _map_terms(op: FermionOperator, n_qubits: int, ladder) -> PauliSum:
    total = PauliSum(n_qubits, {})
    for term, coeff in op.terms.items():
        acc = PauliSum.identity(n_qubits, coeff)
        for mode, dag in term:
            acc = acc * ladder(mode, dag)
        total = total + acc
    return total.prune()


def map_operator(op: FermionOperator, n_qubits: int, mapping: str) -> PauliSum:
    """Dispatch to a named fermion-to-qubit mapping ('jw' or 'parity')."""
    if mapping == "jw":
        return jordan_wigner(op, n_qubits)
    if mapping == "parity":
        return parity_mapping(op, n_qubits)
    raise ValueError(f"unknown mapping {mapping!r}")


def hamiltonian_to_pauli(
    e_core: float, h: np.ndarray, v: np.ndarray, mapping: str = "jw"
) -> PauliSum:
    """Qubit Hamiltonian from spatial integrals (2 qubits per spatial orbital)."""
    n_qubits = 2 * h.shape[0]
    return map_operator(hamiltonian_to_fermion(e_core, h, v), n_qubits, mapping)
