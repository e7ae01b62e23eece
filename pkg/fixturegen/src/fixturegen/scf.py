"""Restricted Hartree-Fock with DIIS acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScfResult:
    """Converged RHF solution.

    Attributes:
        energy: total energy including nuclear repulsion.
        mo_coefficients: AO-to-MO matrix, columns are orbitals.
        mo_energies: canonical orbital energies.
        n_iterations: macro-iterations used.
    """

    energy: float
    mo_coefficients: np.ndarray
    mo_energies: np.ndarray
    n_iterations: int


class ScfConvergenceError(RuntimeError):
    """Raised when the SCF loop fails to reach the energy threshold."""


def _orthogonalizer(s: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh(s)
    keep = vals > tol
    if not np.all(keep):
        vals = vals[keep]
        vecs = vecs[:, keep]
    return vecs / np.sqrt(vals)[None, :]


def _fock(h: np.ndarray, eri: np.ndarray, density: np.ndarray) -> np.ndarray:
    j = np.einsum("pqrs,rs->pq", eri, density, optimize=True)
    k = np.einsum("prqs,rs->pq", eri, density, optimize=True)
    return h + 2.0 * j - k


def _fix_mo_signs(c: np.ndarray) -> np.ndarray:
    c = c.copy()
    for col in range(c.shape[1]):
        pivot = int(np.argmax(np.abs(c[:, col])))
        if c[pivot, col] < 0.0:
            c[:, col] = -c[:, col]
    return c


def _gwh_guess(s: np.ndarray, h: np.ndarray, k: float = 1.75) -> np.ndarray:
    diag = np.diag(h)
    f = 0.5 * k * (diag[:, None] + diag[None, :]) * s
    np.fill_diagonal(f, diag)
    return f


def restricted_hartree_fock(s: np.ndarray, h: np.ndarray, eri: np.ndarray,
                            n_occ: int, e_nuc: float,
                            max_iterations: int = 200,
                            energy_tol: float = 1e-12,
                            level_shift: float = 0.0,
                            diis_depth: int = 8,
                            f_init: np.ndarray | None = None) -> ScfResult:
    """Solve RHF equations for a closed-shell system.

    Args:
        s, h, eri: AO overlap, core Hamiltonian, two-electron integrals
            in chemists' notation (pq|rs).
        n_occ: number of doubly occupied orbitals.
        e_nuc: nuclear repulsion energy.
        max_iterations: iteration cap before giving up.
        energy_tol: required energy change between iterations.
        level_shift: virtual-orbital shift applied while the DIIS error
            is large; stabilizes near-degenerate occupations.
        diis_depth: number of retained Fock/error pairs.
        f_init: starting effective Fock; defaults to a Wolfsberg-Helmholz
            screening of the core Hamiltonian.

    Raises:
        ScfConvergenceError: threshold not reached within the cap.
    """
    x = _orthogonalizer(s)
    fock_history: list[np.ndarray] = []
    error_history: list[np.ndarray] = []

    f = _gwh_guess(s, h) if f_init is None else f_init.copy()
    energy = 0.0
    density = np.zeros_like(h)
    for iteration in range(1, max_iterations + 1):
        f_eff = f
        if level_shift > 0.0 and iteration > 1:
            # shift virtual space: F + shift * (S - S D S) projects onto it
            f_eff = f + level_shift * (s - s @ density @ s)
        f_orth = x.T @ f_eff @ x
        eps, c_orth = np.linalg.eigh(f_orth)
        c = x @ c_orth
        density = c[:, :n_occ] @ c[:, :n_occ].T
        f = _fock(h, eri, density)
        new_energy = float(np.sum(density * (h + f))) + e_nuc

        residual = f @ density @ s - s @ density @ f
        error = x.T @ residual @ x
        converged = (abs(new_energy - energy) < energy_tol
                     and np.max(np.abs(error)) < 1e-9)
        energy = new_energy
        if converged and iteration > 1:
            # canonical orbitals of the final, unshifted Fock matrix
            eps, c_orth = np.linalg.eigh(x.T @ f @ x)
            c = _fix_mo_signs(x @ c_orth)
            return ScfResult(energy=energy, mo_coefficients=c,
                             mo_energies=eps, n_iterations=iteration)

        fock_history.append(f)
        error_history.append(error)
        if len(fock_history) > diis_depth:
            fock_history.pop(0)
            error_history.pop(0)
        if len(fock_history) >= 2:
            f = _diis_extrapolate(fock_history, error_history)

    raise ScfConvergenceError(
        f"SCF not converged in {max_iterations} iterations "
        f"(last energy {energy:.12f})")


def _diis_extrapolate(focks: list[np.ndarray], errors: list[np.ndarray]) -> np.ndarray:
    m = len(focks)
    b = -np.ones((m + 1, m + 1))
    b[m, m] = 0.0
    for i in range(m):
        for j in range(m):
            b[i, j] = float(np.sum(errors[i] * errors[j]))
    rhs = np.zeros(m + 1)
    rhs[m] = -1.0
    try:
        coeff = np.linalg.solve(b, rhs)[:m]
    except np.linalg.LinAlgError:
        return focks[-1]
    return sum(c * f for c, f in zip(coeff, focks))


def _converge_any(s, h, eri, n_occ, e_nuc, max_iterations, f_init=None) -> ScfResult:
    try:
        return restricted_hartree_fock(s, h, eri, n_occ, e_nuc,
                                       max_iterations=max_iterations,
                                       f_init=f_init)
    except ScfConvergenceError:
        return restricted_hartree_fock(s, h, eri, n_occ, e_nuc,
                                       max_iterations=max_iterations * 2,
                                       level_shift=0.3, f_init=f_init)


def solve_rhf(s: np.ndarray, h: np.ndarray, eri: np.ndarray, n_occ: int,
              e_nuc: float, max_iterations: int = 200) -> ScfResult:
    """RHF with a level-shift retry and an occupation stability sweep.

    The converged state is probed by seeding restarts from every single
    occupied-virtual swap of its orbitals; any restart that lands strictly
    lower replaces it and the sweep repeats.  This catches saddle-point
    solutions that aufbau iteration from a poor guess can settle into,
    which otherwise poison every quantity derived from the orbitals.
    """
    best = _converge_any(s, h, eri, n_occ, e_nuc, max_iterations)
    n_orb = h.shape[0]
    improved = True
    while improved:
        improved = False
        for occ in range(n_occ):
            for vir in range(n_occ, n_orb):
                order = list(range(n_orb))
                order[occ], order[vir] = order[vir], order[occ]
                c = best.mo_coefficients[:, order]
                density = c[:, :n_occ] @ c[:, :n_occ].T
                try:
                    candidate = _converge_any(s, h, eri, n_occ, e_nuc,
                                              max_iterations,
                                              f_init=_fock(h, eri, density))
                except ScfConvergenceError:
                    continue
                if candidate.energy < best.energy - 1e-9:
                    best = candidate
                    improved = True
                    break
            if improved:
                break
    return best
