"""FCIDUMP parsing, active-space embedding and orbital-rotation tests."""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from vqeac.integrals import (
    ActiveSpace,
    FcidumpError,
    IntegralSet,
    apply_orbital_rotation,
    determinant_energy,
    embed_active_space,
    parse_fcidump,
    rhf_determinant_energy,
    rotate_orbitals,
    write_fcidump,
)

from conftest import random_integral_set

SAMPLE = """\
 &FCI NORB=  2,NELEC= 2,MS2=0,
  ORBSYM=1,1,
  ISYM=1,
 &END
  6.7571015425e-01    1    1    1    1
  6.6458173078e-01    2    2    1    1
  1.8122957385e-01    2    1    2    1
  6.9857372843e-01    2    2    2    2
 -1.2524635735e+00    1    1    0    0
 -4.7560749650e-01    2    2    0    0
  7.1510433908e-01    0    0    0    0
"""


def test_parse_header_and_records():
    ints = parse_fcidump(SAMPLE)
    assert ints.n_orb == 2
    assert ints.n_elec == 2
    assert ints.ms2 == 0
    assert ints.orbsym == (1, 1)
    npt.assert_allclose(ints.core_energy, 0.71510433908)
    npt.assert_allclose(ints.h, [[-1.2524635735, 0.0], [0.0, -0.4756074965]])
    npt.assert_allclose(ints.v[0, 0, 0, 0], 0.67571015425)
    npt.assert_allclose(ints.v[1, 1, 1, 1], 0.69857372843)


def test_parse_unfolds_eightfold_symmetry():
    ints = parse_fcidump(SAMPLE)
    val = 0.66458173078
    for idx in [(1, 1, 0, 0), (0, 0, 1, 1)]:
        npt.assert_allclose(ints.v[idx], val)
    val = 0.18122957385
    for idx in [(1, 0, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1), (0, 1, 0, 1)]:
        npt.assert_allclose(ints.v[idx], val)
    npt.assert_allclose(ints.v[1, 1, 1, 0], 0.0)


def test_parse_slash_terminated_header_and_blank_lines():
    text = " &FCI NORB=1,NELEC=2,MS2=0,ORBSYM=1,ISYM=1\n /\n\n 1.5 1 1 1 1\n -0.5 1 1 0 0\n 0.25 0 0 0 0\n"
    ints = parse_fcidump(text)
    assert ints.n_orb == 1
    npt.assert_allclose(ints.h[0, 0], -0.5)
    npt.assert_allclose(ints.v[0, 0, 0, 0], 1.5)
    npt.assert_allclose(ints.core_energy, 0.25)


def test_parse_ignores_orbital_energy_records():
    text = " &FCI NORB=2,NELEC=2,MS2=0,\n &END\n -0.6 1 0 0 0\n -0.1 2 0 0 0\n -1.0 1 1 0 0\n"
    ints = parse_fcidump(text)
    npt.assert_allclose(ints.h[0, 0], -1.0)
    npt.assert_allclose(ints.v, 0.0)


def test_parse_rejects_bad_header():
    with pytest.raises(FcidumpError, match="header must start"):
        parse_fcidump("NORB=2\n&END\n")
    with pytest.raises(FcidumpError, match="NORB"):
        parse_fcidump(" &FCI NELEC=2,\n &END\n")
    with pytest.raises(FcidumpError, match="not terminated"):
        parse_fcidump(" &FCI NORB=2,NELEC=2,\n 1.0 1 1 1 1\n")


def test_parse_rejects_bad_records():
    head = " &FCI NORB=2,NELEC=2,MS2=0,\n &END\n"
    with pytest.raises(FcidumpError, match="line 3"):
        parse_fcidump(head + " 1.0 1 1\n")
    with pytest.raises(FcidumpError, match="out of range"):
        parse_fcidump(head + " 1.0 3 1 1 1\n")
    with pytest.raises(FcidumpError, match="unparsable"):
        parse_fcidump(head + " abc 1 1 1 1\n")
    with pytest.raises(FcidumpError, match="unsupported index pattern"):
        parse_fcidump(head + " 1.0 1 0 1 1\n")


def test_parse_rejects_conflicting_duplicates():
    head = " &FCI NORB=2,NELEC=2,MS2=0,\n &END\n"
    with pytest.raises(FcidumpError, match="conflicting duplicate"):
        parse_fcidump(head + " 1.0 1 2 0 0\n 2.0 2 1 0 0\n")
    with pytest.raises(FcidumpError, match="conflicting duplicate"):
        parse_fcidump(head + " 1.0 1 2 1 1\n 2.0 2 1 1 1\n")
    # Agreeing duplicates pass.
    ints = parse_fcidump(head + " 1.0 1 2 1 1\n 1.0 2 1 1 1\n")
    npt.assert_allclose(ints.v[0, 1, 0, 0], 1.0)


def test_write_parse_round_trip(tmp_path):
    ints = random_integral_set(3, 4, seed=11)
    path = tmp_path / "rt.fcidump"
    write_fcidump(ints, path, threshold=0.0)
    back = parse_fcidump(path.read_text())
    assert back.n_orb == ints.n_orb
    assert back.n_elec == ints.n_elec
    npt.assert_allclose(back.core_energy, ints.core_energy, atol=1e-14)
    npt.assert_allclose(back.h, ints.h, atol=1e-14)
    npt.assert_allclose(back.v, ints.v, atol=1e-14)


def test_integral_set_validates_shapes_and_symmetry():
    with pytest.raises(ValueError, match="not symmetric"):
        IntegralSet(2, 2, 0, 0.0, np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros((2,) * 4))
    v_bad = np.zeros((2,) * 4)
    v_bad[0, 1, 0, 0] = 1.0
    with pytest.raises(ValueError, match="8-fold"):
        IntegralSet(2, 2, 0, 0.0, np.zeros((2, 2)), v_bad)


def test_active_space_build_and_validation():
    cas = ActiveSpace.build(n_orb=6, n_elec=8, n_active_elec=4, n_active_orb=3)
    assert cas.inactive == (0, 1)
    assert cas.active == (2, 3, 4)
    assert cas.virtual == (5,)
    assert cas.n_active_orb == 3
    npt.assert_array_equal(cas.classes(6), [0, 0, 1, 1, 1, 2])
    with pytest.raises(ValueError, match="even"):
        ActiveSpace.build(6, 7, 4, 3)
    with pytest.raises(ValueError, match="exceeds"):
        ActiveSpace.build(4, 4, 2, 4)
    with pytest.raises(ValueError, match="do not fit"):
        ActiveSpace.build(6, 8, 8, 3)


def test_determinant_energy_against_manual_sum():
    ints = random_integral_set(3, 4, seed=5)
    h, v = ints.h, ints.v
    occ = [0, 1]
    expected = ints.core_energy + 2 * (h[0, 0] + h[1, 1])
    for p in occ:
        for q in occ:
            expected += 2 * v[p, p, q, q] - v[p, q, q, p]
    npt.assert_allclose(rhf_determinant_energy(ints), expected, rtol=1e-13)


def test_embedding_preserves_closed_shell_energy():
    # Splitting a closed-shell determinant across the embedding boundary
    # must reproduce the full-space determinant energy exactly.
    ints = random_integral_set(5, 6, seed=7)
    cas = ActiveSpace.build(n_orb=5, n_elec=6, n_active_elec=2, n_active_orb=3)
    emb = embed_active_space(ints, cas)
    act_ints = IntegralSet(
        n_orb=3, n_elec=2, ms2=0, core_energy=emb.e_core, h=emb.h_eff, v=emb.v_act
    )
    npt.assert_allclose(
        rhf_determinant_energy(act_ints), rhf_determinant_energy(ints), rtol=1e-12
    )


def test_embedding_open_shell_consistency():
    # Same check with an open-shell active determinant.
    ints = random_integral_set(4, 4, seed=13)
    cas = ActiveSpace.build(n_orb=4, n_elec=4, n_active_elec=2, n_active_orb=3)
    emb = embed_active_space(ints, cas)
    act_ints = IntegralSet(
        n_orb=3, n_elec=2, ms2=2, core_energy=emb.e_core, h=emb.h_eff, v=emb.v_act
    )
    full = determinant_energy(ints, [0, 1, 2], [0])
    npt.assert_allclose(determinant_energy(act_ints, [0, 1], []), full, rtol=1e-12)


def test_embedding_with_no_inactive_is_identity():
    ints = random_integral_set(3, 2, seed=3)
    cas = ActiveSpace.build(n_orb=3, n_elec=2, n_active_elec=2, n_active_orb=3)
    emb = embed_active_space(ints, cas)
    npt.assert_allclose(emb.e_core, ints.core_energy)
    npt.assert_allclose(emb.h_eff, ints.h)
    npt.assert_allclose(emb.v_act, ints.v)


def test_rotation_matches_explicit_loop_transform():
    ints = random_integral_set(3, 2, seed=21)
    rng = np.random.default_rng(22)
    kappa = rng.normal(size=(3, 3))
    kappa = 0.3 * (kappa - kappa.T)
    rotated, u = rotate_orbitals(ints, kappa)
    npt.assert_allclose(u.T @ u, np.eye(3), atol=1e-12)

    n = 3
    h_ref = np.zeros((n, n))
    v_ref = np.zeros((n,) * 4)
    for p in range(n):
        for q in range(n):
            h_ref[p, q] = sum(
                u[a, p] * ints.h[a, b] * u[b, q] for a in range(n) for b in range(n)
            )
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s in range(n):
                    acc = 0.0
                    for a in range(n):
                        for b in range(n):
                            for c in range(n):
                                for d in range(n):
                                    acc += (
                                        u[a, p] * u[b, q] * u[c, r] * u[d, s]
                                        * ints.v[a, b, c, d]
                                    )
                    v_ref[p, q, r, s] = acc
    npt.assert_allclose(rotated.h, h_ref, atol=1e-12)
    npt.assert_allclose(rotated.v, v_ref, atol=1e-12)


def test_rotation_roundtrip_and_occupied_invariance():
    ints = random_integral_set(4, 4, seed=31)
    rng = np.random.default_rng(32)
    kappa = np.zeros((4, 4))
    kappa[0, 1] = 0.4
    kappa[1, 0] = -0.4
    kappa[2, 3] = -0.2
    kappa[3, 2] = 0.2
    rotated, _ = rotate_orbitals(ints, kappa)
    # occupied-occupied and virtual-virtual mixing leaves the determinant
    # energy unchanged
    npt.assert_allclose(
        rhf_determinant_energy(rotated), rhf_determinant_energy(ints), rtol=1e-12
    )
    back, _ = rotate_orbitals(rotated, -kappa)
    npt.assert_allclose(back.h, ints.h, atol=1e-12)
    npt.assert_allclose(back.v, ints.v, atol=1e-12)
    del rng


def test_apply_rotation_rejects_non_orthogonal():
    ints = random_integral_set(2, 2, seed=41)
    with pytest.raises(ValueError, match="not orthogonal"):
        apply_orbital_rotation(ints, np.array([[1.0, 0.1], [0.0, 1.0]]))
