"""Embedded Gaussian basis-set library and shell construction.

Exponents are in inverse squared bohr; contraction coefficients refer to
normalized primitives, as published in the standard tabulations.  Only the
element/basis combinations needed by the fixture corpus are included.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ANGULAR_MOMENTUM = {"s": 0, "p": 1, "d": 2}

ELEMENT_NUMBERS = {"H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8}

BOHR_PER_ANGSTROM = 1.0 / 0.529177210903

# (shell letter, exponents, contraction coefficients)
_LIBRARY: dict[tuple[str, str], list[tuple[str, list[float], list[float]]]] = {
    ("sto-3g", "H"): [
        ("s", [3.425250914, 0.6239137298, 0.1688554040],
              [0.1543289673, 0.5353281423, 0.4446345422]),
    ],
    ("sto-3g", "Li"): [
        ("s", [16.11957475, 2.936200663, 0.7946504870],
              [0.1543289673, 0.5353281423, 0.4446345422]),
        ("s", [0.6362897469, 0.1478600533, 0.0480886784],
              [-0.09996722919, 0.3995128261, 0.7001154689]),
        ("p", [0.6362897469, 0.1478600533, 0.0480886784],
              [0.1559162750, 0.6076837186, 0.3919573931]),
    ],
    ("sto-3g", "Be"): [
        ("s", [30.16787069, 5.495115306, 1.487192653],
              [0.1543289673, 0.5353281423, 0.4446345422]),
        ("s", [1.314833110, 0.3055389383, 0.0993707456],
              [-0.09996722919, 0.3995128261, 0.7001154689]),
        ("p", [1.314833110, 0.3055389383, 0.0993707456],
              [0.1559162750, 0.6076837186, 0.3919573931]),
    ],
    ("sto-3g", "N"): [
        ("s", [99.10616896, 18.05231239, 4.885660238],
              [0.1543289673, 0.5353281423, 0.4446345422]),
        ("s", [3.780455879, 0.8784966449, 0.2857143744],
              [-0.09996722919, 0.3995128261, 0.7001154689]),
        ("p", [3.780455879, 0.8784966449, 0.2857143744],
              [0.1559162750, 0.6076837186, 0.3919573931]),
    ],
    ("6-31g", "H"): [
        ("s", [18.73113696, 2.825394365, 0.6401216923],
              [0.03349460434, 0.2347269535, 0.8137573261]),
        ("s", [0.1612777588], [1.0]),
    ],
    ("cc-pvdz", "N"): [
        ("s", [9046.0, 1357.0, 309.3, 87.73, 28.56, 10.21, 3.838, 0.7466],
              [0.000700, 0.005389, 0.027406, 0.103207, 0.278723, 0.448540,
               0.278238, 0.015440]),
        ("s", [9046.0, 1357.0, 309.3, 87.73, 28.56, 10.21, 3.838, 0.7466],
              [-0.000153, -0.001208, -0.005992, -0.024544, -0.067459,
               -0.158078, -0.121831, 0.549003]),
        ("s", [0.2248], [1.0]),
        ("p", [13.55, 2.917, 0.7973],
              [0.039919, 0.217169, 0.510319]),
        ("p", [0.2185], [1.0]),
        ("d", [0.817], [1.0]),
    ],
}


@dataclass
class Shell:
    """One contracted Cartesian shell on a fixed center."""

    angmom: int
    center: np.ndarray
    exponents: np.ndarray
    coefficients: np.ndarray  # includes primitive normalization

    n_cartesian: int = field(init=False)

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float)
        self.exponents = np.asarray(self.exponents, dtype=float)
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.n_cartesian = (self.angmom + 1) * (self.angmom + 2) // 2


def cartesian_powers(l: int) -> list[tuple[int, int, int]]:
    """Monomial powers of a Cartesian shell, lexicographic in (x, y, z)."""
    return [(l - i, i - j, j) for i in range(l + 1) for j in range(i + 1)]


def primitive_norm(alpha: float, powers: tuple[int, int, int]) -> float:
    lx, ly, lz = powers
    l = lx + ly + lz
    fact = _double_factorial(2 * lx - 1) * _double_factorial(2 * ly - 1) \
        * _double_factorial(2 * lz - 1)
    return ((2.0 * alpha / np.pi) ** 0.75) * ((4.0 * alpha) ** (l / 2.0)) / np.sqrt(fact)


def _double_factorial(n: int) -> float:
    out = 1.0
    while n > 1:
        out *= n
        n -= 2
    return out


def build_shells(geometry: list[tuple[str, float, float, float]], basis: str) -> list[Shell]:
    """Contracted shells for a geometry given in angstrom.

    Primitive normalization uses the (l, 0, 0) component convention; the
    per-component correction and the final contracted normalization are
    applied by the integral layer.

    Raises:
        KeyError: element/basis combination not in the embedded library.
    """
    shells = []
    key_basis = basis.lower()
    for element, x, y, z in geometry:
        try:
            entries = _LIBRARY[(key_basis, element)]
        except KeyError:
            raise KeyError(f"no embedded data for element {element} in basis {basis}")
        center = np.array([x, y, z], dtype=float) * BOHR_PER_ANGSTROM
        for letter, exps, coefs in entries:
            l = ANGULAR_MOMENTUM[letter]
            norms = np.array([primitive_norm(a, (l, 0, 0)) for a in exps])
            shells.append(Shell(l, center, np.array(exps), np.array(coefs) * norms))
    return shells


def nuclear_charges(geometry: list[tuple[str, float, float, float]]) -> np.ndarray:
    return np.array([ELEMENT_NUMBERS[el] for el, _, _, _ in geometry], dtype=float)


def nuclear_coordinates(geometry: list[tuple[str, float, float, float]]) -> np.ndarray:
    return np.array([[x, y, z] for _, x, y, z in geometry], dtype=float) * BOHR_PER_ANGSTROM


def nuclear_repulsion(geometry: list[tuple[str, float, float, float]]) -> float:
    charges = nuclear_charges(geometry)
    coords = nuclear_coordinates(geometry)
    energy = 0.0
    for i in range(len(charges)):
        for j in range(i):
            energy += charges[i] * charges[j] / np.linalg.norm(coords[i] - coords[j])
    return energy
