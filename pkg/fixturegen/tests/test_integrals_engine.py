"""Integral engine checks against textbook values and derivative oracles."""

import numpy as np
import numpy.testing as npt
import pytest
from scipy.special import erf

from fixturegen.basis import Shell, build_shells, nuclear_charges, \
    nuclear_coordinates, nuclear_repulsion, primitive_norm
from fixturegen.md import _ShellPair, assemble_ao_integrals, boys, \
    eri_block, kinetic_block, nuclear_block, overlap_block

BOHR = 0.529177210903


def _s_shell(center, exponent):
    return Shell(0, np.asarray(center, float), np.array([exponent]),
                 np.array([primitive_norm(exponent, (0, 0, 0))]))


def _p_shell(center, exponent):
    return Shell(1, np.asarray(center, float), np.array([exponent]),
                 np.array([primitive_norm(exponent, (1, 0, 0))]))


def test_boys_against_error_function():
    t = np.array([1e-16, 1e-8, 0.1, 1.0, 7.5, 40.0])
    f = boys(3, t)
    expected0 = np.where(t < 1e-12, 1.0 - t / 3.0,
                         0.5 * np.sqrt(np.pi / np.maximum(t, 1e-30))
                         * erf(np.sqrt(t)))
    npt.assert_allclose(f[0], expected0, rtol=1e-12, atol=1e-12)
    # downward identity 2t F_{n+1} = (2n+1) F_n - exp(-t)
    for n in range(3):
        npt.assert_allclose(2 * t * f[n + 1], (2 * n + 1) * f[n] - np.exp(-t),
                            rtol=1e-10, atol=1e-12)


def test_textbook_h2_minimal_basis_integrals():
    # H2 at 1.4 bohr in the zeta = 1.24 scaled minimal basis
    geom = [("H", 0.0, 0.0, 0.0), ("H", 0.0, 0.0, 1.4 * BOHR)]
    shells = build_shells(geom, "sto-3g")
    s, t, v, eri = assemble_ao_integrals(
        shells, nuclear_charges(geom), nuclear_coordinates(geom))
    npt.assert_allclose(s[0, 1], 0.6593, atol=2e-4)
    npt.assert_allclose(t[0, 0], 0.7600, atol=2e-4)
    npt.assert_allclose(t[0, 1], 0.2365, atol=2e-4)
    npt.assert_allclose(eri[0, 0, 0, 0], 0.7746, atol=2e-4)
    npt.assert_allclose(eri[0, 0, 1, 1], 0.5697, atol=2e-4)
    npt.assert_allclose(eri[0, 1, 0, 1], 0.2970, atol=2e-4)
    npt.assert_allclose(eri[0, 0, 0, 1], 0.4441, atol=2e-4)
    npt.assert_allclose(nuclear_repulsion(geom), 1.0 / 1.4, rtol=1e-12)


def test_p_integrals_match_center_derivative_oracle():
    """A p function is the center derivative of an s function, so every
    p integral must equal a finite difference of pure-s integrals."""
    alpha, beta = 1.3, 0.9
    a = np.zeros(3)
    b = np.array([0.4, -0.2, 1.1])
    c = np.array([-0.3, 0.8, 0.2])
    d = np.array([0.9, 0.1, -0.6])
    conv = 2 * alpha * primitive_norm(alpha, (0, 0, 0)) \
        / primitive_norm(alpha, (1, 0, 0))
    h = 1e-4

    def displaced(az):
        return np.array([0.0, 0.0, az])

    def fd(fun):
        return (fun(h) - fun(-h)) / (2 * h)

    val = overlap_block(_ShellPair(_p_shell(a, alpha), _s_shell(b, beta)))[2, 0]
    ref = fd(lambda az: overlap_block(
        _ShellPair(_s_shell(displaced(az), alpha), _s_shell(b, beta)))[0, 0])
    npt.assert_allclose(val * conv, ref, atol=1e-7)

    val = kinetic_block(_ShellPair(_p_shell(a, alpha), _s_shell(b, beta)))[2, 0]
    ref = fd(lambda az: kinetic_block(
        _ShellPair(_s_shell(displaced(az), alpha), _s_shell(b, beta)))[0, 0])
    npt.assert_allclose(val * conv, ref, atol=1e-7)

    charges = np.array([1.7])
    coords = np.array([[0.25, -0.4, 0.7]])
    val = nuclear_block(_ShellPair(_p_shell(a, alpha), _s_shell(b, beta)),
                        charges, coords)[2, 0]
    ref = fd(lambda az: nuclear_block(
        _ShellPair(_s_shell(displaced(az), alpha), _s_shell(b, beta)),
        charges, coords)[0, 0])
    npt.assert_allclose(val * conv, ref, atol=1e-7)

    ket = _ShellPair(_s_shell(c, 0.7), _s_shell(d, 1.8))
    val = eri_block(_ShellPair(_p_shell(a, alpha), _s_shell(b, beta)), ket)[2, 0, 0, 0]
    ref = fd(lambda az: eri_block(
        _ShellPair(_s_shell(displaced(az), alpha), _s_shell(b, beta)), ket)[0, 0, 0, 0])
    npt.assert_allclose(val * conv, ref, atol=1e-7)


def test_two_center_pp_integrals_match_double_derivative_oracle():
    alpha, beta = 1.3, 0.9
    a = np.zeros(3)
    b = np.array([0.4, -0.2, 1.1])
    conv = (2 * alpha * primitive_norm(alpha, (0, 0, 0))
            / primitive_norm(alpha, (1, 0, 0))) \
        * (2 * beta * primitive_norm(beta, (0, 0, 0))
           / primitive_norm(beta, (1, 0, 0)))
    h = 1e-3

    def fd2(fun):
        return (fun(h, b[2] + h) - fun(h, b[2] - h)
                - fun(-h, b[2] + h) + fun(-h, b[2] - h)) / (4 * h * h)

    def pair(az, bz):
        av = np.array([0.0, 0.0, az])
        bv = np.array([b[0], b[1], bz])
        return _ShellPair(_s_shell(av, alpha), _s_shell(bv, beta))

    val = overlap_block(_ShellPair(_p_shell(a, alpha), _p_shell(b, beta)))[2, 2]
    npt.assert_allclose(val * conv, fd2(lambda az, bz: overlap_block(pair(az, bz))[0, 0]),
                        atol=1e-5)

    val = kinetic_block(_ShellPair(_p_shell(a, alpha), _p_shell(b, beta)))[2, 2]
    npt.assert_allclose(val * conv, fd2(lambda az, bz: kinetic_block(pair(az, bz))[0, 0]),
                        atol=1e-5)

    ket = _ShellPair(_s_shell(np.array([-0.3, 0.8, 0.2]), 0.7),
                     _s_shell(np.array([0.9, 0.1, -0.6]), 1.8))
    val = eri_block(_ShellPair(_p_shell(a, alpha), _p_shell(b, beta)), ket)[2, 2, 0, 0]
    npt.assert_allclose(val * conv,
                        fd2(lambda az, bz: eri_block(pair(az, bz), ket)[0, 0, 0, 0]),
                        atol=1e-5)


def test_ao_integral_symmetries():
    geom = [("Li", 0.0, 0.0, 0.0), ("H", 0.3, -0.2, 1.5)]
    shells = build_shells(geom, "sto-3g")
    s, t, v, eri = assemble_ao_integrals(
        shells, nuclear_charges(geom), nuclear_coordinates(geom))
    npt.assert_allclose(s, s.T, atol=1e-13)
    npt.assert_allclose(t, t.T, atol=1e-13)
    npt.assert_allclose(v, v.T, atol=1e-13)
    npt.assert_allclose(np.diag(s), np.ones(len(s)), atol=1e-13)
    npt.assert_allclose(eri, eri.transpose(1, 0, 2, 3), atol=1e-12)
    npt.assert_allclose(eri, eri.transpose(0, 1, 3, 2), atol=1e-12)
    npt.assert_allclose(eri, eri.transpose(2, 3, 0, 1), atol=1e-12)
    vals = np.linalg.eigvalsh(s)
    assert vals.min() > 1e-6


def test_unknown_element_or_basis_raises():
    with pytest.raises(KeyError):
        build_shells([("Xx", 0.0, 0.0, 0.0)], "sto-3g")
    with pytest.raises(KeyError):
        build_shells([("H", 0.0, 0.0, 0.0)], "cc-pvqz")
