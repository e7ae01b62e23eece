"""Exact statevector simulation primitives.

States are complex128 arrays of length 2**n_qubits; bit q of the basis index
holds qubit q (LSB = qubit 0).  In the occupation encoding qubit q is the
occupation of fermionic mode q; the parity encoding stores running parities
and is reached by the prefix-XOR relabeling of basis indices.
"""

from __future__ import annotations

import numpy as np

from vqeac import _kernels
from vqeac.operators import PauliSum, _I_POW

__all__ = [
    "zero_state",
    "basis_state",
    "prepare_reference",
    "apply_pauli_rotation",
    "apply_pauli_sum",
    "expectation",
    "apply_ladder",
    "occupation_to_parity",
    "parity_to_occupation",
    "overlap",
]


def zero_state(n_qubits: int) -> np.ndarray:
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[index] = 1.0
    return state


def occupation_index(occupied_modes) -> int:
    idx = 0
    for m in occupied_modes:
        bit = 1 << m
        if idx & bit:
            raise ValueError(f"mode {m} listed twice")
        idx |= bit
    return idx


def prepare_reference(n_qubits: int, occupied_modes, mapping: str = "jw") -> np.ndarray:
    """Product reference state for the given occupied modes and encoding."""
    idx = occupation_index(occupied_modes)
    if idx >> n_qubits:
        raise ValueError("occupied mode exceeds qubit count")
    state = basis_state(n_qubits, idx)
    if mapping == "jw":
        return state
    if mapping == "parity":
        return occupation_to_parity(state, n_qubits)
    raise ValueError(f"unknown mapping {mapping!r}")


def _premultiplied_arrays(pauli: PauliSum) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mask arrays with coefficients folded with i**n_Y per term."""
    xs, zs, coeffs = pauli.to_arrays()
    folded = coeffs.copy()
    for t in range(xs.shape[0]):
        ny = int(xs[t] & zs[t]).bit_count()
        folded[t] = folded[t] * _I_POW[ny % 4]
    return xs, zs, folded


def apply_pauli_rotation(state: np.ndarray, x: int, z: int, theta: float) -> np.ndarray:
    """In-place state <- exp(-i theta/2 P) state for the Pauli term (x, z)."""
    ny = int(x & z).bit_count()
    cos_half = np.cos(0.5 * theta)
    m = -1j * np.sin(0.5 * theta) * _I_POW[ny % 4]
    _kernels.pauli_rotation_inplace(state, np.uint64(x), np.uint64(z), cos_half, m)
    return state


def apply_pauli_sum(state: np.ndarray, pauli: PauliSum) -> np.ndarray:
    """New vector O|state> for a PauliSum O."""
    if state.shape[0] != 1 << pauli.n_qubits:
        raise ValueError("state dimension does not match operator qubit count")
    xs, zs, coeffs = _premultiplied_arrays(pauli)
    out = np.empty_like(state)
    _kernels.pauli_sum_apply(state, xs, zs, coeffs, out)
    return out


def expectation(state: np.ndarray, pauli: PauliSum) -> complex:
    """<state| O |state>; real part is the physical value for hermitian O."""
    if state.shape[0] != 1 << pauli.n_qubits:
        raise ValueError("state dimension does not match operator qubit count")
    xs, zs, coeffs = _premultiplied_arrays(pauli)
    return complex(_kernels.pauli_sum_expectation(state, xs, zs, coeffs))


def apply_ladder(state: np.ndarray, mode: int, dagger: bool) -> np.ndarray:
    """New vector a_mode|state> (annihilation) or its adjoint, occupation basis."""
    out = np.empty_like(state)
    _kernels.ladder_apply(state, mode, dagger, out)
    return out


def occupation_to_parity(state: np.ndarray, n_qubits: int) -> np.ndarray:
    out = np.empty_like(state)
    _kernels.basis_permute_prefix_xor(state, n_qubits, False, out)
    return out


def parity_to_occupation(state: np.ndarray, n_qubits: int) -> np.ndarray:
    out = np.empty_like(state)
    _kernels.basis_permute_prefix_xor(state, n_qubits, True, out)
    return out


def overlap(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.vdot(a, b))
