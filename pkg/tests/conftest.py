"""Shared fixtures and synthetic-integral helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from vqeac.integrals import IntegralSet

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def symmetrize_two_body(v: np.ndarray) -> np.ndarray:
    """Project a random 4-index tensor onto the 8-fold symmetric subspace."""
    v = v + v.transpose(1, 0, 2, 3)
    v = v + v.transpose(0, 1, 3, 2)
    v = v + v.transpose(2, 3, 0, 1)
    return v / 8.0


def random_integral_set(n_orb: int, n_elec: int, seed: int, scale: float = 0.2) -> IntegralSet:
    """Small random Hermitian integral set for unit tests (not a molecule)."""
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n_orb, n_orb))
    h = 0.5 * (h + h.T)
    # A diagonal ramp keeps spectra non-degenerate so tests are stable.
    h += np.diag(np.arange(n_orb, dtype=float))
    v = symmetrize_two_body(scale * rng.normal(size=(n_orb,) * 4))
    return IntegralSet(
        n_orb=n_orb,
        n_elec=n_elec,
        ms2=0,
        core_energy=float(rng.normal()),
        h=h,
        v=v,
    )


def fixture_path(name: str) -> Path:
    path = FIXTURE_DIR / name
    if not path.exists():
        pytest.skip(f"fixture {name} not generated")
    return path
