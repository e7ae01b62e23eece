"""Two-step orbital optimization for active-space wavefunctions.

The outer step minimizes the energy over orbital rotations exp(kappa) with
the active-space reduced density matrices held fixed; the inner step
re-solves the active-space wavefunction in the rotated orbitals.  Because
the fixed-RDM rotation energy is the exact energy of the rotated reference
state, each accepted outer step lowers the true energy, so alternation
converges like a coordinate descent.

Rotation parameters are ordered orbital pairs (p, q) with p > q, one angle
per pair; pairs inside the inactive or virtual blocks are redundant and
never included.  Active-active rotations matter only for inner solvers that
cannot reach the exact CAS ground state, so they default on for ansatz-based
solvers and off for exact ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.optimize

from .ansatz import (
    empty_circuit,
    fermionic_pool,
    qubit_pool,
    uccsd_circuit,
)
from .contractions import double_commutator, generalized_fock
from .exactsolver import casci_ground_state, energy_from_rdms, rdms_from_ci
from .integrals import ActiveSpace, IntegralSet, embed_active_space, rotate_orbitals
from .rdm import expand_rdms, measure_rdms
from .vqe import VqeProblem, adapt_vqe, minimize_vqe

__all__ = [
    "ALL_ROTATION_CLASSES",
    "InnerSolution",
    "MacroIteration",
    "OrbitalOptError",
    "OrbitalOptResult",
    "default_rotation_classes",
    "inner_solver",
    "optimize_orbitals",
    "orbital_gradient",
    "orbital_hessian_diagonal",
    "pairs_to_matrix",
    "rotation_pairs",
]

ALL_ROTATION_CLASSES = ("ia", "iv", "av", "aa")

_CLASS_LETTER = {0: "i", 1: "a", 2: "v"}


def rotation_pairs(
    cas: ActiveSpace, n_orb: int, classes: tuple[str, ...] = ALL_ROTATION_CLASSES
) -> list[tuple[int, int]]:
    """Non-redundant rotation pairs (p, q), p > q, filtered by class label.

    A pair's label joins the letters of its two orbital classes in the order
    inactive < active < virtual, so the valid labels are "ia", "iv", "av"
    and "aa"; intra-inactive and intra-virtual pairs are always dropped.
    """
    for label in classes:
        if label not in ALL_ROTATION_CLASSES:
            raise ValueError(f"unknown rotation class {label!r}")
    kinds = cas.classes(n_orb)
    pairs = []
    for p in range(n_orb):
        for q in range(p):
            kp, kq = int(kinds[p]), int(kinds[q])
            if kp == kq and kp != 1:
                continue
            lo, hi = sorted((kp, kq))
            label = _CLASS_LETTER[lo] + _CLASS_LETTER[hi]
            if label in classes:
                pairs.append((p, q))
    return pairs


def default_rotation_classes(flavor: str) -> tuple[str, ...]:
    """Active-active rotations are redundant for exact CAS solvers only."""
    if flavor in ("casci", "fci"):
        return ("ia", "iv", "av")
    return ALL_ROTATION_CLASSES


def pairs_to_matrix(angles: np.ndarray, pairs: list[tuple[int, int]], n_orb: int) -> np.ndarray:
    """Antisymmetric generator with angles[k] at pairs[k] = (p, q), p > q."""
    kappa = np.zeros((n_orb, n_orb))
    for t, (p, q) in zip(angles, pairs):
        kappa[p, q] = t
        kappa[q, p] = -t
    return kappa


def orbital_gradient(ints: IntegralSet, dmat: np.ndarray, pmat: np.ndarray) -> np.ndarray:
    """Energy derivative with respect to every rotation angle at kappa = 0.

    Returns the full antisymmetric matrix G with G_pq = dE/dkappa_pq
    = 2 (GF_pq - GF_qp); entries at redundant pairs are zero for states with
    the matching block structure and are simply ignored by callers.
    """
    if dmat.shape != ints.h.shape:
        raise ValueError("density matrix does not match the orbital count of the integrals")
    gf = generalized_fock(ints.h, ints.v, dmat, pmat)
    return 2.0 * (gf - gf.T)


def orbital_hessian_diagonal(
    ints: IntegralSet, dmat: np.ndarray, pmat: np.ndarray, pairs: list[tuple[int, int]]
) -> np.ndarray:
    """Exact diagonal d^2 E / dkappa_pq^2 of the fixed-RDM rotation energy.

    The bilinear combination over (E_pq - E_qp) makes the eigenstate
    symmetrization terms cancel, so the plain double commutator suffices.
    """
    dc = double_commutator(ints.h, ints.v, dmat, pmat, symmetrized=False)
    out = np.empty(len(pairs))
    for k, (p, q) in enumerate(pairs):
        out[k] = -(dc[p, q, p, q] - dc[p, q, q, p] - dc[q, p, p, q] + dc[q, p, q, p])
    return out


@dataclass
class InnerSolution:
    """Result of one active-space solve inside the macro-iteration loop."""

    energy: float
    d_act: np.ndarray
    p_act: np.ndarray
    warm_state: object = None
    n_evaluations: int = 0


InnerSolver = Callable[[object, object], InnerSolution]


def _casci_solver(emb, warm) -> InnerSolution:
    res = casci_ground_state(emb)
    d, p = rdms_from_ci(res.space, res.ci)
    return InnerSolution(res.energy, d, p, None, res.n_iterations)


def _make_ucc_solver(include_singles: bool) -> InnerSolver:
    def solve(emb, warm) -> InnerSolution:
        circuit = uccsd_circuit(
            emb.n_active_orb, emb.n_active_elec, emb.ms2,
            include_singles=include_singles,
        )
        problem = VqeProblem(emb, circuit)
        theta0 = None
        if warm is not None and np.shape(warm) == (circuit.n_params,):
            theta0 = warm
        res = minimize_vqe(problem, theta0)
        d, p = measure_rdms(problem, problem.prepare(res.thetas))
        return InnerSolution(res.energy, d, p, res.thetas, res.n_iterations)

    return solve


def _make_adapt_solver(kind: str) -> InnerSolver:
    def solve(emb, warm) -> InnerSolution:
        if warm is None:
            circuit = empty_circuit(emb.n_active_orb, emb.n_active_elec, emb.ms2)
            theta0 = None
        else:
            circuit, theta0 = warm
        if kind == "qubit":
            pool = qubit_pool(emb.n_active_orb, emb.n_active_elec, emb.ms2)
        else:
            pool = fermionic_pool(emb.n_active_orb, emb.n_active_elec, emb.ms2)
        res = adapt_vqe(emb, circuit, pool, theta0=theta0)
        problem = VqeProblem(emb, res.circuit)
        d, p = measure_rdms(problem, problem.prepare(res.thetas))
        return InnerSolution(
            res.energy, d, p, (res.circuit, res.thetas), len(res.history)
        )

    return solve


def inner_solver(flavor: str) -> InnerSolver:
    """Map a method name to an active-space solver callable."""
    table = {
        "casci": _casci_solver,
        "fci": _casci_solver,
        "uccd": _make_ucc_solver(include_singles=False),
        "uccsd": _make_ucc_solver(include_singles=True),
        "adapt": _make_adapt_solver("fermionic"),
        "qubit-adapt": _make_adapt_solver("qubit"),
    }
    if flavor not in table:
        raise ValueError(f"unknown inner solver flavor {flavor!r}")
    return table[flavor]


@dataclass
class MacroIteration:
    """One row of the optimization trace."""

    index: int
    energy: float
    grad_norm: float
    step_norm: float
    inner_evaluations: int
    halvings: int


class OrbitalOptError(RuntimeError):
    """Raised when a rotation step cannot be made to lower the energy."""

    def __init__(self, message: str, trace: list[MacroIteration]):
        super().__init__(message)
        self.trace = trace


@dataclass
class OrbitalOptResult:
    energy: float
    ints: IntegralSet
    rotation: np.ndarray
    cas: ActiveSpace
    solution: InnerSolution
    trace: list[MacroIteration] = field(default_factory=list)
    converged: bool = False

    @property
    def n_macro(self) -> int:
        return len(self.trace)


def _rotation_model(ints, pairs, scale, dmat, pmat):
    """Energy and exact gradient of the fixed-RDM model in scaled angles."""
    n = ints.n_orb

    def fun(t):
        kappa = pairs_to_matrix(t * scale, pairs, n)
        rot, u = rotate_orbitals(ints, kappa)
        e = energy_from_rdms(rot.core_energy, rot.h, rot.v, dmat, pmat)
        gf = generalized_fock(rot.h, rot.v, dmat, pmat)
        # dE = Tr(A^T dU) with A = U (GF - GF^T); pull dU back through the
        # exponential with the adjoint Frechet derivative.
        a = u @ (gf - gf.T)
        w = scipy.linalg.expm_frechet(kappa.T, a, compute_expm=False)
        grad = np.array([w[p, q] - w[q, p] for p, q in pairs]) * scale
        return e, grad

    return fun


def optimize_orbitals(
    ints: IntegralSet,
    cas: ActiveSpace,
    solver: str | InnerSolver = "casci",
    classes: tuple[str, ...] | None = None,
    g_tol: float = 1e-5,
    e_tol: float = 1e-8,
    max_macro: int = 100,
    shift_floor: float = 0.1,
    max_halvings: int = 10,
) -> OrbitalOptResult:
    """Alternate active-space solves with fixed-RDM orbital relaxations.

    Args:
        ints: full-space integrals in the starting orbital basis.
        cas: active-space partition (fixed orbital index sets).
        solver: method name understood by ``inner_solver`` or a callable
            ``(emb, warm_state) -> InnerSolution``.
        classes: rotation classes to vary; default depends on the flavor.
        g_tol: infinity-norm threshold on the included rotation gradient.
        e_tol: threshold on the energy change between macro-iterations.
        max_macro: macro-iteration budget.
        shift_floor: lower bound applied to the Hessian-diagonal
            preconditioner via a uniform level shift.
        max_halvings: step halvings allowed before giving up on a rise.

    Returns:
        OrbitalOptResult in the rotated basis; ``rotation`` maps starting
        orbitals to final ones, new = old @ rotation.

    Raises:
        OrbitalOptError: if a step raises the energy even after halving.
    """
    if isinstance(solver, str):
        if classes is None:
            classes = default_rotation_classes(solver)
        solver = inner_solver(solver)
    elif classes is None:
        classes = ALL_ROTATION_CLASSES
    n = ints.n_orb
    pairs = rotation_pairs(cas, n, classes)

    ints_cur = ints
    u_total = np.eye(n)
    sol = solver(embed_active_space(ints_cur, cas), None)
    e_cur = sol.energy
    e_prev = np.inf
    trace: list[MacroIteration] = []
    converged = False

    for macro in range(max_macro):
        dmat, pmat = expand_rdms(cas, sol.d_act, sol.p_act)
        gmat = orbital_gradient(ints_cur, dmat, pmat)
        gnorm = max((abs(gmat[p, q]) for p, q in pairs), default=0.0)

        if gnorm < g_tol and abs(e_cur - e_prev) < e_tol:
            trace.append(MacroIteration(macro, e_cur, gnorm, 0.0, sol.n_evaluations, 0))
            converged = True
            break
        if not pairs:
            trace.append(MacroIteration(macro, e_cur, gnorm, 0.0, sol.n_evaluations, 0))
            converged = True
            break

        hd = orbital_hessian_diagonal(ints_cur, dmat, pmat, pairs)
        hd = hd + max(0.0, shift_floor - hd.min())
        scale = 1.0 / np.sqrt(hd)
        model = _rotation_model(ints_cur, pairs, scale, dmat, pmat)
        opt = scipy.optimize.minimize(
            model, np.zeros(len(pairs)), jac=True, method="BFGS",
            options={"gtol": max(0.05 * gnorm, 0.1 * g_tol), "maxiter": 300},
        )
        step = opt.x

        halvings = 0
        while True:
            kappa = pairs_to_matrix(step * scale, pairs, n)
            ints_trial, u_step = rotate_orbitals(ints_cur, kappa)
            sol_trial = solver(embed_active_space(ints_trial, cas), sol.warm_state)
            if sol_trial.energy <= e_cur + 1e-10:
                break
            halvings += 1
            if halvings > max_halvings:
                trace.append(MacroIteration(
                    macro, e_cur, gnorm, float(np.linalg.norm(step * scale)),
                    sol.n_evaluations, halvings,
                ))
                raise OrbitalOptError(
                    f"macro-iteration {macro}: energy rose from {e_cur:.12f} to "
                    f"{sol_trial.energy:.12f} after {max_halvings} step halvings",
                    trace,
                )
            step = 0.5 * step

        trace.append(MacroIteration(
            macro, e_cur, gnorm, float(np.linalg.norm(step * scale)),
            sol.n_evaluations, halvings,
        ))
        ints_cur = ints_trial
        u_total = u_total @ u_step
        e_prev = e_cur
        e_cur = sol_trial.energy
        sol = sol_trial

    return OrbitalOptResult(
        energy=e_cur,
        ints=ints_cur,
        rotation=u_total,
        cas=cas,
        solution=sol,
        trace=trace,
        converged=converged,
    )
