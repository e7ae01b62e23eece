"""Numba kernels for statevector manipulation.

All kernels are single-threaded with fixed evaluation order, so results are
bit-for-bit reproducible run to run.  Basis convention: bit q of the basis
index is the occupation (or parity bit) of qubit q, qubit 0 = LSB.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64_1 = np.uint64(1)

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def popcount64(v):
    v = v - ((v >> U64_1) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return (v * _H01) >> np.uint64(56)


@njit(cache=True, inline="always")
def parity64(v):
    return popcount64(v) & U64_1


@njit(cache=True)
def prefix_xor(v):
    """Bit j of the result is the XOR of bits 0..j of v."""
    v = v ^ (v << U64_1)
    v = v ^ (v << np.uint64(2))
    v = v ^ (v << np.uint64(4))
    v = v ^ (v << np.uint64(8))
    v = v ^ (v << np.uint64(16))
    v = v ^ (v << np.uint64(32))
    return v


@njit(cache=True)
def pauli_rotation_inplace(state, x, z, cos_half, m):
    """state <- (cos(t/2) - i sin(t/2) P) state for one Pauli term.

    ``m`` is the premultiplied complex factor -i sin(t/2) i**n_Y, so the
    per-amplitude phase reduces to the Z-mask parity sign.
    """
    dim = state.shape[0]
    if x == np.uint64(0):
        for b in range(dim):
            sgn = -1.0 if parity64(np.uint64(b) & z) else 1.0
            state[b] = (cos_half + m * sgn) * state[b]
        return
    hb = np.uint64(63) - np.uint64(_clz(x))
    low = (U64_1 << hb) - U64_1
    half = dim >> 1
    for idx in range(half):
        u = np.uint64(idx)
        b = ((u & ~low) << U64_1) | (u & low)
        b2 = b ^ x
        s1 = -1.0 if parity64(b2 & z) else 1.0
        s2 = -1.0 if parity64(b & z) else 1.0
        a1 = state[b]
        a2 = state[b2]
        state[b] = cos_half * a1 + m * s1 * a2
        state[b2] = cos_half * a2 + m * s2 * a1
    return


@njit(cache=True, inline="always")
def _clz(x):
    """Count leading zeros of a nonzero uint64."""
    n = 0
    probe = np.uint64(0x8000000000000000)
    while not (x & probe):
        probe >>= U64_1
        n += 1
    return n


@njit(cache=True)
def pauli_sum_apply(state, xs, zs, coeffs, out):
    """out <- sum_t coeffs[t] * sign_t(b) * state[b ^ xs[t]].

    Coefficients must be premultiplied by i**n_Y of their term.
    """
    dim = state.shape[0]
    out[:] = 0.0
    for t in range(xs.shape[0]):
        x = xs[t]
        z = zs[t]
        c = coeffs[t]
        for b in range(dim):
            b2 = np.uint64(b) ^ x
            sgn = -1.0 if parity64(b2 & z) else 1.0
            out[b] += c * sgn * state[b2]
    return out


@njit(cache=True)
def pauli_sum_expectation(state, xs, zs, coeffs):
    """<state| O |state> with premultiplied coefficients (see pauli_sum_apply)."""
    dim = state.shape[0]
    total = 0.0 + 0.0j
    for t in range(xs.shape[0]):
        x = xs[t]
        z = zs[t]
        acc = 0.0 + 0.0j
        for b in range(dim):
            b2 = np.uint64(b) ^ x
            sgn = -1.0 if parity64(b2 & z) else 1.0
            acc += sgn * np.conj(state[b]) * state[b2]
        total += coeffs[t] * acc
    return total


@njit(cache=True)
def ladder_apply(state, mode, dagger, out):
    """out <- a_mode state (or creation when dagger), occupation basis."""
    dim = state.shape[0]
    bit = U64_1 << np.uint64(mode)
    low = bit - U64_1
    out[:] = 0.0
    for b in range(dim):
        ub = np.uint64(b)
        occupied = (ub & bit) != np.uint64(0)
        if occupied == dagger:
            continue
        sgn = -1.0 if parity64(ub & low) else 1.0
        out[b ^ bit] = sgn * state[b]
    return out


@njit(cache=True)
def basis_permute_prefix_xor(state, n_qubits, inverse, out):
    """Gather amplitudes along the prefix-XOR bijection of basis indices.

    inverse=False: out[prefix_xor(b)] = state[b] (occupation -> parity).
    inverse=True:  out[b] = state[prefix_xor(b)] (parity -> occupation).
    """
    dim = state.shape[0]
    mask = (U64_1 << np.uint64(n_qubits)) - U64_1
    for b in range(dim):
        pb = prefix_xor(np.uint64(b)) & mask
        if inverse:
            out[b] = state[pb]
        else:
            out[pb] = state[b]
    return out
