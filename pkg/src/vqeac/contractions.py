"""Commutator expectation values contracted against reference RDMs.

For the spin-summed excitation operators E_ab = sum_s a+_{a s} a_{b s} and a
Hamiltonian given by spatial integrals,

    H = sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) e_pqrs,
    e_pqrs = E_pq E_rs - delta_qr E_ps,

every function here evaluates an exact operator identity contracted against
the reference 1-/2-RDMs

    D_pq = <E_pq>,   P_pqrs = <e_pqrs>,

so the results hold for any normalized reference state, eigenstate or not.
These contractions are shared by the orbital optimizer (gradient and Hessian
preconditioner) and by the extended-RPA matrix assembly.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "generalized_fock",
    "one_body_commutator",
    "double_commutator",
    "commutator_metric",
]


def generalized_fock(h: np.ndarray, v: np.ndarray, dmat: np.ndarray,
                     pmat: np.ndarray) -> np.ndarray:
    """Generalized Fock intermediate GF_mn = (h D)_mn + sum_axy (ma|xy) P_anxy.

    Its antisymmetric part is the commutator expectation

        <[H, E_uv]> = GF_uv - GF_vu,

    which vanishes for eigenstates and doubles as the orbital-rotation
    gradient kernel.
    """
    return h @ dmat + np.einsum("maxy,anxy->mn", v, pmat, optimize=True)


def one_body_commutator(gf: np.ndarray) -> np.ndarray:
    """<[H, E_uv]> for all (u, v) from a precomputed generalized Fock."""
    return gf - gf.T


def double_commutator(h: np.ndarray, v: np.ndarray, dmat: np.ndarray,
                      pmat: np.ndarray, gf: np.ndarray | None = None,
                      symmetrized: bool = False) -> np.ndarray:
    """Double-commutator expectations DC[a,b,c,d] = <[E_ab, [H, E_cd]]>.

    With ``symmetrized=True`` the Hermitian combination

        1/2 <[E_ab, [H, E_cd]] + [[E_ab, H], E_cd]>
            = DC[a,b,c,d] - 1/2 <[H, [E_ab, E_cd]]>

    is returned instead; the corrector contracts to generalized-Fock
    asymmetries and vanishes on eigenstates.

    Args:
        h: one-electron matrix of the operator whose commutators are taken
            (any symmetric matrix, not necessarily the physical h).
        v: chemists' two-electron tensor with full 8-fold symmetry.
        dmat: spin-summed 1-RDM of the reference.
        pmat: spin-summed 2-RDM of the reference.
        gf: optional precomputed ``generalized_fock(h, v, dmat, pmat)``.

    Returns:
        (n, n, n, n) array over all index quadruples (a, b, c, d).
    """
    n = h.shape[0]
    if gf is None:
        gf = generalized_fock(h, v, dmat, pmat)
    eye = np.eye(n)
    dc = (
        np.einsum("bc,ad->abcd", h, dmat, optimize=True)
        + np.einsum("da,cb->abcd", h, dmat, optimize=True)
        - np.einsum("ad,cb->abcd", eye, gf, optimize=True)
        - np.einsum("bc,da->abcd", eye, gf, optimize=True)
        - np.einsum("ecxa,edxb->abcd", v, pmat, optimize=True)
        + np.einsum("bcxy,adxy->abcd", v, pmat, optimize=True)
        + np.einsum("ecby,eday->abcd", v, pmat, optimize=True)
        + np.einsum("daxy,cbxy->abcd", v, pmat, optimize=True)
        + np.einsum("dexa,cexb->abcd", v, pmat, optimize=True)
        - np.einsum("deby,ceay->abcd", v, pmat, optimize=True)
    )
    if symmetrized:
        asym = gf - gf.T
        dc -= 0.5 * (
            np.einsum("bc,ad->abcd", eye, asym)
            - np.einsum("ad,cb->abcd", eye, asym)
        )
    return dc


def commutator_metric(dmat: np.ndarray) -> np.ndarray:
    """Metric expectations NC[a,b,c,d] = <[E_ab, E_cd]> = d_bc D_ad - d_ad D_cb."""
    n = dmat.shape[0]
    eye = np.eye(n)
    return (
        np.einsum("bc,ad->abcd", eye, dmat)
        - np.einsum("ad,cb->abcd", eye, dmat)
    )
