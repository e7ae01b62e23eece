"""Ansatz circuits: parameterized products of exponentiated generators.

A circuit is an ordered list of blocks applied to a product reference state.
Each block is either a fermionic excitation generator K (single a+_m0 a_m1
or double a+_m0 a+_m1 a_m2 a_m3, minus hermitian conjugate) exponentiated as
exp(theta * weight * K), or a single Pauli rotation exp(theta * i P).  The
exponential of each fermionic block is realized as the ordered product of
Pauli rotations of its mapped image (the rotations within one block commute,
so that product is exact); blocks sharing a parameter are applied in listed
order (first-order single-step factorization of the full generator sum).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from vqeac.operators import FermionOperator, map_operator

__all__ = [
    "ExcitationBlock",
    "PauliBlock",
    "PoolOperator",
    "AnsatzCircuit",
    "reference_modes",
    "uccsd_circuit",
    "uccd_circuit",
    "fermionic_pool",
    "qubit_pool",
    "cnot_count",
]


@dataclass(frozen=True)
class ExcitationBlock:
    """One anti-hermitian fermionic generator, exp(theta * weight * K).

    modes: (creator, annihilator) for singles, (creator, creator,
    annihilator, annihilator) for doubles, spin-orbital indices in the
    operator order of K = a+ [a+] [a] a - h.c.
    """

    modes: tuple[int, ...]
    param: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if len(self.modes) not in (2, 4):
            raise ValueError("excitation blocks are singles or doubles")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"repeated mode in excitation {self.modes}")

    def generator(self) -> FermionOperator:
        """The anti-hermitian operator K (weight excluded)."""
        if len(self.modes) == 2:
            a, i = self.modes
            fwd = FermionOperator.from_term(((a, 1), (i, 0)), 1.0)
        else:
            a, b, j, i = self.modes
            fwd = FermionOperator.from_term(((a, 1), (b, 1), (j, 0), (i, 0)), 1.0)
        return fwd - fwd.dagger()

    def conserves_particle_number(self) -> bool:
        return True


@dataclass(frozen=True)
class PauliBlock:
    """One Pauli rotation exp(theta * i P) for the term with masks (x, z)."""

    x: int
    z: int
    param: int

    def n_y(self) -> int:
        return (self.x & self.z).bit_count()

    def weight_letters(self) -> int:
        return (self.x | self.z).bit_count()


@dataclass(frozen=True)
class PoolOperator:
    """A candidate generator for adaptive ansatz growth.

    blocks hold param = -1 placeholders; binding a concrete parameter index
    happens when the operator is appended to a circuit.
    """

    label: str
    blocks: tuple


@dataclass
class AnsatzCircuit:
    """Ordered block circuit over an occupation-encoded reference."""

    n_qubits: int
    reference: tuple[int, ...]
    blocks: list
    n_params: int
    mapping: str = "jw"

    def __post_init__(self) -> None:
        self._rotation_cache: list | None = None
        for b in self.blocks:
            self._check_block(b)

    def _check_block(self, block) -> None:
        if isinstance(block, ExcitationBlock):
            top = max(block.modes)
        else:
            top = (block.x | block.z).bit_length() - 1
        if top >= self.n_qubits:
            raise ValueError("block acts outside the qubit register")

    def append(self, pool_op: PoolOperator) -> int:
        """Add a pool operator with a fresh parameter; returns its index."""
        index = self.n_params
        for b in pool_op.blocks:
            bound = replace(b, param=index)
            self._check_block(bound)
            self.blocks.append(bound)
        self.n_params += 1
        self._rotation_cache = None
        return index

    def conserves_particle_number(self) -> bool:
        return all(isinstance(b, ExcitationBlock) for b in self.blocks)

    def pauli_rotations(self) -> list[tuple[int, int, float, int]]:
        """Flat rotation list (x, z, coeff, param): the circuit is the ordered
        product of exp(i theta_param coeff P) over this list."""
        if self._rotation_cache is None:
            rotations: list[tuple[int, int, float, int]] = []
            for block in self.blocks:
                if isinstance(block, PauliBlock):
                    rotations.append((block.x, block.z, 1.0, block.param))
                    continue
                mapped = map_operator(
                    block.generator() * block.weight, self.n_qubits, self.mapping
                )
                keys, coeffs = mapped.sorted_terms()
                for (x, z), c in zip(keys, coeffs):
                    if abs(c.real) > 1e-14:
                        raise ValueError(
                            "generator image must be anti-hermitian (imaginary "
                            "coefficients)"
                        )
                    rotations.append((x, z, float(c.imag), block.param))
            self._rotation_cache = rotations
        return self._rotation_cache

    def n_rotations(self) -> int:
        return len(self.pauli_rotations())

    def cnot_count(self) -> int:
        """Two-qubit cost model: a weight-w Pauli rotation takes 2(w-1) CNOTs."""
        total = 0
        for x, z, _, _ in self.pauli_rotations():
            w = (x | z).bit_count()
            if w > 1:
                total += 2 * (w - 1)
        return total


def cnot_count(circuit: AnsatzCircuit) -> int:
    return circuit.cnot_count()


def reference_modes(n_spatial: int, n_elec: int, ms2: int) -> tuple[int, ...]:
    """Aufbau occupation of spin-orbital modes for the reference determinant."""
    n_alpha = (n_elec + ms2) // 2
    n_beta = (n_elec - ms2) // 2
    if n_alpha + n_beta != n_elec or min(n_alpha, n_beta) < 0:
        raise ValueError(f"incompatible n_elec={n_elec}, ms2={ms2}")
    if max(n_alpha, n_beta) > n_spatial:
        raise ValueError("electrons exceed orbital capacity")
    modes = [2 * p for p in range(n_alpha)] + [2 * p + 1 for p in range(n_beta)]
    return tuple(sorted(modes))


def _spin_conserving_singles(occ: list[int], virt: list[int]):
    for i in occ:
        for a in virt:
            if (i - a) % 2 == 0:
                yield (a, i)


def _spin_conserving_doubles(occ: list[int], virt: list[int]):
    for oi in range(len(occ)):
        for oj in range(oi + 1, len(occ)):
            i, j = occ[oi], occ[oj]
            sz_occ = (i % 2) + (j % 2)
            for ai in range(len(virt)):
                for bi in range(ai + 1, len(virt)):
                    a, b = virt[ai], virt[bi]
                    if (a % 2) + (b % 2) == sz_occ:
                        yield (a, b, j, i)


def uccsd_circuit(
    n_spatial: int, n_elec: int, ms2: int = 0, include_singles: bool = True,
    mapping: str = "jw",
) -> AnsatzCircuit:
    """Particle-hole coupled-cluster ansatz, one parameter per spin-orbital
    excitation that preserves the spin projection; first-order single-step
    factorization of the exponential."""
    n_qubits = 2 * n_spatial
    ref = reference_modes(n_spatial, n_elec, ms2)
    occ = sorted(ref)
    virt = [m for m in range(n_qubits) if m not in ref]
    blocks: list = []
    param = 0
    if include_singles:
        for modes in _spin_conserving_singles(occ, virt):
            blocks.append(ExcitationBlock(modes=modes, param=param))
            param += 1
    for modes in _spin_conserving_doubles(occ, virt):
        blocks.append(ExcitationBlock(modes=modes, param=param))
        param += 1
    return AnsatzCircuit(
        n_qubits=n_qubits, reference=ref, blocks=blocks, n_params=param,
        mapping=mapping,
    )


def uccd_circuit(n_spatial: int, n_elec: int, ms2: int = 0, mapping: str = "jw") -> AnsatzCircuit:
    return uccsd_circuit(n_spatial, n_elec, ms2, include_singles=False, mapping=mapping)


def empty_circuit(n_spatial: int, n_elec: int, ms2: int = 0, mapping: str = "jw") -> AnsatzCircuit:
    """Bare reference circuit for adaptive growth."""
    return AnsatzCircuit(
        n_qubits=2 * n_spatial,
        reference=reference_modes(n_spatial, n_elec, ms2),
        blocks=[],
        n_params=0,
        mapping=mapping,
    )


def fermionic_pool(n_spatial: int, n_elec: int, ms2: int = 0) -> list[PoolOperator]:
    """Spin-adapted particle-hole pool for adaptive growth.

    Singles are the spin-summed E_ai - E_ia over spatial orbital pairs;
    doubles are E_ai E_bj - h.c. over unordered pairs of spatial
    particle-hole moves, each expanded into its spin-orbital excitation
    blocks sharing a single parameter.
    """
    if ms2 != 0 or n_elec % 2:
        raise ValueError("the spin-adapted pool expects a closed-shell reference")
    n_occ = n_elec // 2
    occ = list(range(n_occ))
    virt = list(range(n_occ, n_spatial))
    pool: list[PoolOperator] = []
    for i in occ:
        for a in virt:
            blocks = (
                ExcitationBlock(modes=(2 * a, 2 * i), param=-1),
                ExcitationBlock(modes=(2 * a + 1, 2 * i + 1), param=-1),
            )
            pool.append(PoolOperator(label=f"s_{a}_{i}", blocks=blocks))
    moves = [(a, i) for i in occ for a in virt]
    for m1 in range(len(moves)):
        for m2 in range(m1, len(moves)):
            a, i = moves[m1]
            b, j = moves[m2]
            blocks = []
            for sa, sb in ((0, 0), (1, 1), (0, 1), (1, 0)):
                ca, cb = 2 * a + sa, 2 * b + sb
                ki, kj = 2 * i + sa, 2 * j + sb
                if ca == cb or ki == kj:
                    continue
                modes = (ca, cb, kj, ki)
                weight = 1.0
                # identical alpha-beta and beta-alpha terms for a diagonal
                # pair collapse into one block of weight 2
                if m1 == m2 and (sa, sb) == (1, 0):
                    continue
                if m1 == m2 and (sa, sb) == (0, 1):
                    weight = 2.0
                blocks.append(ExcitationBlock(modes=modes, param=-1, weight=weight))
            if blocks:
                pool.append(PoolOperator(label=f"d_{a}_{i}_{b}_{j}", blocks=tuple(blocks)))
    return pool


def qubit_pool(
    n_spatial: int, n_elec: int, ms2: int = 0, mapping: str = "jw"
) -> list[PoolOperator]:
    """Pauli-string pool: the mapped images of the fermionic pool with all
    Z letters removed, deduplicated in first-appearance order; every entry
    is a single rotation exp(theta i P) with an odd Y count."""
    n_qubits = 2 * n_spatial
    seen: set[tuple[int, int]] = set()
    pool: list[PoolOperator] = []
    for fop in fermionic_pool(n_spatial, n_elec, ms2):
        gen = FermionOperator()
        for b in fop.blocks:
            gen = gen + b.generator() * b.weight
        mapped = map_operator(gen, n_qubits, mapping)
        for (x, z), _ in zip(*mapped.sorted_terms()):
            z_stripped = z & x  # keep Y letters, drop pure-Z letters
            key = (x, z_stripped)
            if key in seen:
                continue
            ny = (x & z_stripped).bit_count()
            if ny % 2 == 0:
                continue
            seen.add(key)
            pool.append(PoolOperator(
                label=f"p_{x:x}_{z_stripped:x}",
                blocks=(PauliBlock(x=x, z=z_stripped, param=-1),),
            ))
    return pool
