"""Fixture generation: geometry in, FCIDUMP plus metadata sidecar out."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ENGINE_NAME, ENGINE_VERSION
from .basis import (build_shells, nuclear_charges, nuclear_coordinates,
                    nuclear_repulsion)
from .md import assemble_ao_integrals
from .scf import ScfResult, solve_rhf

Geometry = list[tuple[str, float, float, float]]


@dataclass(frozen=True)
class FixtureSpec:
    """One fixture to generate.

    Attributes:
        molecule: short label, e.g. "h2".
        geometry: atoms as (element, x, y, z) with coordinates in Angstrom.
        basis: basis-set label known to the integral engine.
        charge: total molecular charge.
        multiplicity: spin multiplicity 2S+1; only singlets are supported.
        basename: output file stem; files are <basename>.fcidump and
            <basename>.meta.json.
    """

    molecule: str
    geometry: Geometry
    basis: str
    charge: int
    multiplicity: int
    basename: str

    def __post_init__(self) -> None:
        if len(self.geometry) < 1:
            raise ValueError("geometry must contain at least one atom")


def load_specs(path: str | Path) -> list[FixtureSpec]:
    """Read a JSON list of fixture descriptions."""
    raw = json.loads(Path(path).read_text())
    specs = []
    for entry in raw:
        geometry = [
            (str(atom[0]), float(atom[1]), float(atom[2]), float(atom[3]))
            for atom in entry["geometry"]
        ]
        specs.append(FixtureSpec(
            molecule=entry["molecule"],
            geometry=geometry,
            basis=entry["basis"],
            charge=int(entry.get("charge", 0)),
            multiplicity=int(entry.get("multiplicity", 1)),
            basename=entry["basename"],
        ))
    return specs


def _mo_integrals(c: np.ndarray, h_ao: np.ndarray, eri_ao: np.ndarray):
    h = c.T @ h_ao @ c
    tmp = np.einsum("pi,pqrs->iqrs", c, eri_ao, optimize=True)
    tmp = np.einsum("qj,iqrs->ijrs", c, tmp, optimize=True)
    tmp = np.einsum("rk,ijrs->ijks", c, tmp, optimize=True)
    eri = np.einsum("sl,ijks->ijkl", c, tmp, optimize=True)
    return h, eri


def write_fcidump(path: Path, n_orb: int, n_elec: int, ms2: int,
                  h: np.ndarray, eri: np.ndarray, core_energy: float,
                  threshold: float = 1e-12) -> None:
    """Emit unique integrals in the Molpro FCIDUMP layout, 1-based indices."""
    lines = [
        f" &FCI NORB={n_orb:4d},NELEC={n_elec:3d},MS2={ms2:2d},",
        "  ORBSYM=" + ",".join("1" for _ in range(n_orb)) + ",",
        "  ISYM=1,",
        " &END",
    ]

    def rec(val: float, i: int, j: int, k: int, l: int) -> str:
        return f"{val:23.16e} {i:4d} {j:4d} {k:4d} {l:4d}"

    for i in range(n_orb):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if kl > ij:
                        continue
                    val = eri[i, j, k, l]
                    if abs(val) > threshold:
                        lines.append(rec(val, i + 1, j + 1, k + 1, l + 1))
    for i in range(n_orb):
        for j in range(i + 1):
            if abs(h[i, j]) > threshold:
                lines.append(rec(h[i, j], i + 1, j + 1, 0, 0))
    lines.append(rec(core_energy, 0, 0, 0, 0))
    path.write_text("\n".join(lines) + "\n")


def run_engine(spec: FixtureSpec) -> tuple[ScfResult, np.ndarray, np.ndarray, float, int]:
    """Integrals plus converged RHF for a spec.

    Returns:
        (scf, h_ao, eri_ao, e_nuc, n_elec).
    """
    if spec.multiplicity != 1:
        raise ValueError("only closed-shell singlet fixtures are supported")
    charges = nuclear_charges(spec.geometry)
    n_elec = int(np.sum(charges)) - spec.charge
    if n_elec % 2:
        raise ValueError(f"odd electron count {n_elec} for a singlet")
    shells = build_shells(spec.geometry, spec.basis)
    coords = nuclear_coordinates(spec.geometry)
    s, t, v, eri = assemble_ao_integrals(shells, charges, coords)
    e_nuc = nuclear_repulsion(spec.geometry)
    scf = solve_rhf(s, t + v, eri, n_elec // 2, e_nuc)
    return scf, t + v, eri, e_nuc, n_elec


def generate(spec: FixtureSpec, outdir: str | Path) -> tuple[Path, Path]:
    """Produce <basename>.fcidump and <basename>.meta.json in outdir.

    Raises:
        ScfConvergenceError: propagated before any file is written.
    """
    scf, h_ao, eri_ao, e_nuc, n_elec = run_engine(spec)
    h_mo, eri_mo = _mo_integrals(scf.mo_coefficients, h_ao, eri_ao)
    n_orb = h_mo.shape[0]

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fcidump_path = outdir / f"{spec.basename}.fcidump"
    meta_path = outdir / f"{spec.basename}.meta.json"

    write_fcidump(fcidump_path, n_orb, n_elec, spec.multiplicity - 1,
                  h_mo, eri_mo, e_nuc)
    meta = {
        "molecule": spec.molecule,
        "basis": spec.basis,
        "charge": spec.charge,
        "multiplicity": spec.multiplicity,
        "geometry_angstrom": [list(atom) for atom in spec.geometry],
        "e_hf": scf.energy,
        "e_nuc": e_nuc,
        "n_orbitals": n_orb,
        "n_electrons": n_elec,
        "scf_iterations": scf.n_iterations,
        "engine": ENGINE_NAME,
        "engine_version": ENGINE_VERSION,
    }
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return fcidump_path, meta_path
