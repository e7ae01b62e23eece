"""Molecular-orbital integral handling: FCIDUMP parsing, active-space
embedding and orbital rotations.

All two-electron integrals are stored in chemists' notation, ``v[p, q, r, s] =
(pq|rs)``, over real spatial orbitals with the full 8-fold permutational
symmetry materialized.  Orbital indices are 0-based everywhere in memory;
the FCIDUMP file format is 1-based.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "IntegralSet",
    "ActiveSpace",
    "EmbeddedHamiltonian",
    "FcidumpError",
    "parse_fcidump",
    "load_fcidump",
    "write_fcidump",
    "embed_active_space",
    "rotate_orbitals",
    "determinant_energy",
    "rhf_determinant_energy",
]

SYMMETRY_TOL = 1e-10


class FcidumpError(ValueError):
    """Raised for malformed FCIDUMP content (parse, bounds or consistency)."""


def _check_two_body_symmetry(v: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    perms = [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]
    for perm in perms:
        dev = np.max(np.abs(v - v.transpose(perm)))
        if dev > tol:
            raise ValueError(
                f"two-electron tensor violates 8-fold symmetry under {perm}: "
                f"max deviation {dev:.3e}"
            )


@dataclass(frozen=True)
class IntegralSet:
    """Spatial-orbital Hamiltonian integrals for the full orbital space.

    Attributes:
        n_orb: number of spatial orbitals.
        n_elec: total electron count.
        ms2: twice the spin projection of the sector recorded in the source.
        core_energy: scalar (nuclear repulsion plus any frozen-core shift).
        h: (n_orb, n_orb) one-electron matrix, symmetric.
        v: (n_orb,)*4 two-electron tensor, chemists' (pq|rs), 8-fold symmetric.
        orbsym: per-orbital symmetry labels as read from the source (unused
            by the solvers, preserved for provenance).
    """

    n_orb: int
    n_elec: int
    ms2: int
    core_energy: float
    h: np.ndarray
    v: np.ndarray
    orbsym: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        n = self.n_orb
        if self.h.shape != (n, n):
            raise ValueError(f"one-electron matrix shape {self.h.shape} != ({n}, {n})")
        if self.v.shape != (n, n, n, n):
            raise ValueError(f"two-electron tensor shape {self.v.shape}")
        if self.n_elec < 0 or self.n_elec > 2 * n:
            raise ValueError(f"electron count {self.n_elec} out of range for {n} orbitals")
        dev = np.max(np.abs(self.h - self.h.T)) if n else 0.0
        if dev > SYMMETRY_TOL:
            raise ValueError(f"one-electron matrix not symmetric: {dev:.3e}")
        _check_two_body_symmetry(self.v)


@dataclass(frozen=True)
class ActiveSpace:
    """Partition of the spatial orbitals into inactive/active/virtual sets.

    Attributes:
        n_active_elec: electrons distributed in the active orbitals.
        inactive: doubly occupied orbital indices (sorted).
        active: active orbital indices (sorted).
        virtual: unoccupied orbital indices (sorted).
    """

    n_active_elec: int
    inactive: tuple[int, ...]
    active: tuple[int, ...]
    virtual: tuple[int, ...]

    @staticmethod
    def build(n_orb: int, n_elec: int, n_active_elec: int, n_active_orb: int) -> "ActiveSpace":
        """Canonical-ordering partition: the active window sits directly above
        the doubly occupied inactive orbitals.

        Args:
            n_orb: total spatial orbitals.
            n_elec: total electrons.
            n_active_elec: electrons kept in the active space.
            n_active_orb: number of active orbitals.
        """
        n_inact_elec = n_elec - n_active_elec
        if n_inact_elec < 0 or n_inact_elec % 2:
            raise ValueError(
                f"inactive electron count {n_inact_elec} must be even and non-negative"
            )
        n_inact = n_inact_elec // 2
        if n_inact + n_active_orb > n_orb:
            raise ValueError(
                f"active window ({n_inact}+{n_active_orb}) exceeds {n_orb} orbitals"
            )
        if n_active_elec > 2 * n_active_orb:
            raise ValueError(
                f"{n_active_elec} electrons do not fit in {n_active_orb} active orbitals"
            )
        return ActiveSpace(
            n_active_elec=n_active_elec,
            inactive=tuple(range(n_inact)),
            active=tuple(range(n_inact, n_inact + n_active_orb)),
            virtual=tuple(range(n_inact + n_active_orb, n_orb)),
        )

    def __post_init__(self) -> None:
        seen = set(self.inactive) | set(self.active) | set(self.virtual)
        total = len(self.inactive) + len(self.active) + len(self.virtual)
        if len(seen) != total:
            raise ValueError("inactive/active/virtual sets overlap")
        if self.n_active_elec < 0 or self.n_active_elec > 2 * len(self.active):
            raise ValueError(
                f"{self.n_active_elec} active electrons in {len(self.active)} orbitals"
            )

    @property
    def n_active_orb(self) -> int:
        return len(self.active)

    def classes(self, n_orb: int) -> np.ndarray:
        """Per-orbital class labels: 0 = inactive, 1 = active, 2 = virtual."""
        cls = np.full(n_orb, -1, dtype=np.int64)
        cls[list(self.inactive)] = 0
        cls[list(self.active)] = 1
        cls[list(self.virtual)] = 2
        if np.any(cls < 0):
            raise ValueError("active-space partition does not cover all orbitals")
        return cls


@dataclass(frozen=True)
class EmbeddedHamiltonian:
    """Active-space Hamiltonian with the inactive mean field folded in.

    ``e_core`` collects the scalar part (source core energy plus the inactive
    closed-shell energy), ``h_eff`` the dressed one-electron matrix over
    active orbitals and ``v_act`` the active-block two-electron tensor.
    """

    e_core: float
    h_eff: np.ndarray
    v_act: np.ndarray
    n_active_elec: int
    ms2: int

    @property
    def n_active_orb(self) -> int:
        return self.h_eff.shape[0]

    def __post_init__(self) -> None:
        n = self.h_eff.shape[0]
        if self.h_eff.shape != (n, n) or self.v_act.shape != (n, n, n, n):
            raise ValueError("inconsistent embedded integral shapes")


_HEADER_KEY_RE = re.compile(r"([A-Za-z0-9_]+)\s*=\s*")


def _parse_header(lines: list[str], start_line: int) -> tuple[dict, int]:
    """Parse the namelist header; returns (fields, index of first data line)."""
    if not lines or not lines[0].lstrip().upper().startswith("&FCI"):
        raise FcidumpError("line 1: header must start with &FCI")
    blob_parts = [lines[0].lstrip()[4:]]
    end = None
    for i, raw in enumerate(lines[1:], start=1):
        stripped = raw.strip()
        upper = stripped.upper()
        if upper.startswith("&END") or stripped.startswith("/"):
            end = i
            break
        blob_parts.append(raw)
    else:
        # The header may terminate inline on the first line.
        pass
    if end is None:
        joined = " ".join(blob_parts)
        m = re.search(r"(&END|/)", joined, flags=re.IGNORECASE)
        if m is None:
            raise FcidumpError("header not terminated by &END or /")
        raise FcidumpError("header terminator must sit on its own line")
    blob = " ".join(blob_parts)
    fields: dict = {}
    matches = list(_HEADER_KEY_RE.finditer(blob))
    for j, m in enumerate(matches):
        key = m.group(1).upper()
        value_str = blob[m.end(): matches[j + 1].start() if j + 1 < len(matches) else len(blob)]
        tokens = [t for t in value_str.replace(",", " ").split() if t]
        if not tokens:
            raise FcidumpError(f"header key {key} has no value")
        try:
            values = [int(t) for t in tokens]
        except ValueError as exc:
            raise FcidumpError(f"header key {key}: non-integer value {tokens!r}") from exc
        fields[key] = values if key == "ORBSYM" else values[0]
    return fields, end + 1


def parse_fcidump(text: str) -> IntegralSet:
    """Parse FCIDUMP content (Molpro convention) into an IntegralSet.

    Record semantics: ``value 0 0 0 0`` is the core energy, ``value i j 0 0``
    a one-electron element h_ij, ``value i j k l`` the chemists' integral
    (ij|kl); all indices 1-based.  Records with only the first index set
    (orbital energies in some producers) are ignored.  Symmetry-equivalent
    duplicates are tolerated when they agree within 1e-10, otherwise a
    consistency error is raised.

    Raises:
        FcidumpError: malformed header or records, out-of-range indices, or
            conflicting duplicate entries.
    """
    lines = text.splitlines()
    fields, data_start = _parse_header(lines, 0)
    for key in ("NORB", "NELEC"):
        if key not in fields:
            raise FcidumpError(f"header missing required key {key}")
    n = fields["NORB"]
    if n <= 0:
        raise FcidumpError(f"NORB must be positive, got {n}")
    n_elec = fields["NELEC"]
    ms2 = fields.get("MS2", 0)
    orbsym = tuple(fields.get("ORBSYM", [1] * n))
    if len(orbsym) != n:
        raise FcidumpError(f"ORBSYM lists {len(orbsym)} labels for NORB={n}")

    h = np.zeros((n, n))
    h_set = np.zeros((n, n), dtype=bool)
    v = np.zeros((n, n, n, n))
    v_set = np.zeros((n, n, n, n), dtype=bool)
    core = 0.0

    def _assign_h(i: int, j: int, val: float, lineno: int) -> None:
        for a, b in ((i, j), (j, i)):
            if h_set[a, b] and abs(h[a, b] - val) > 1e-10:
                raise FcidumpError(
                    f"line {lineno}: conflicting duplicate h[{a + 1},{b + 1}]: "
                    f"{h[a, b]!r} vs {val!r}"
                )
            h[a, b] = val
            h_set[a, b] = True

    def _assign_v(i: int, j: int, k: int, l: int, val: float, lineno: int) -> None:
        images = {
            (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
            (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
        }
        for idx in images:
            if v_set[idx] and abs(v[idx] - val) > 1e-10:
                raise FcidumpError(
                    f"line {lineno}: conflicting duplicate integral at "
                    f"{tuple(x + 1 for x in idx)}: {v[idx]!r} vs {val!r}"
                )
            v[idx] = val
            v_set[idx] = True

    for lineno, raw in enumerate(lines[data_start:], start=data_start + 1):
        stripped = raw.strip()
        if not stripped:
            continue
        tokens = stripped.split()
        if len(tokens) != 5:
            raise FcidumpError(f"line {lineno}: expected 'value i j k l', got {stripped!r}")
        try:
            val = float(tokens[0])
            ijkl = [int(t) for t in tokens[1:]]
        except ValueError as exc:
            raise FcidumpError(f"line {lineno}: unparsable record {stripped!r}") from exc
        i, j, k, l = ijkl
        for x in ijkl:
            if x < 0 or x > n:
                raise FcidumpError(f"line {lineno}: index {x} out of range 0..{n}")
        if i == j == k == l == 0:
            core = val
        elif k == 0 and l == 0:
            if j == 0:
                continue  # orbital-energy record; carries no Hamiltonian data
            _assign_h(i - 1, j - 1, val, lineno)
        elif i and j and k and l:
            _assign_v(i - 1, j - 1, k - 1, l - 1, val, lineno)
        else:
            raise FcidumpError(f"line {lineno}: unsupported index pattern {tuple(ijkl)}")

    return IntegralSet(
        n_orb=n, n_elec=n_elec, ms2=ms2, core_energy=core,
        h=h, v=v, orbsym=orbsym,
    )


def load_fcidump(path: str | Path) -> IntegralSet:
    """Read an FCIDUMP file from disk.  See parse_fcidump for the format."""
    return parse_fcidump(Path(path).read_text())


def load_sidecar(path: str | Path) -> dict:
    """Read the JSON metadata sidecar stored next to an FCIDUMP file."""
    p = Path(path)
    sidecar = p.with_suffix(p.suffix + ".meta.json") if not str(p).endswith(".meta.json") else p
    with open(sidecar) as fh:
        return json.load(fh)


def write_fcidump(ints: IntegralSet, path: str | Path, threshold: float = 1e-12) -> None:
    """Write an IntegralSet in FCIDUMP format (unique integrals only)."""
    n = ints.n_orb
    lines = [
        f" &FCI NORB={n:4d},NELEC={ints.n_elec:3d},MS2={ints.ms2:2d},",
        "  ORBSYM=" + ",".join(str(s) for s in (ints.orbsym or (1,) * n)) + ",",
        "  ISYM=1,",
        " &END",
    ]
    def rec(val: float, i: int, j: int, k: int, l: int) -> str:
        return f"{val:23.16e} {i:4d} {j:4d} {k:4d} {l:4d}"

    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if kl > ij:
                        continue
                    val = ints.v[i, j, k, l]
                    if abs(val) > threshold:
                        lines.append(rec(val, i + 1, j + 1, k + 1, l + 1))
    for i in range(n):
        for j in range(i + 1):
            if abs(ints.h[i, j]) > threshold:
                lines.append(rec(ints.h[i, j], i + 1, j + 1, 0, 0))
    lines.append(rec(ints.core_energy, 0, 0, 0, 0))
    Path(path).write_text("\n".join(lines) + "\n")


def embed_active_space(ints: IntegralSet, cas: ActiveSpace) -> EmbeddedHamiltonian:
    """Fold the inactive closed shell into an active-space Hamiltonian.

    The scalar picks up the inactive determinant energy; the active
    one-electron matrix is dressed with the inactive Coulomb/exchange mean
    field.  The active two-electron block is copied verbatim.
    """
    inact = list(cas.inactive)
    act = list(cas.active)
    cls = cas.classes(ints.n_orb)  # validates coverage
    del cls

    h, v = ints.h, ints.v
    e_core = ints.core_energy
    if inact:
        e_core += 2.0 * np.einsum("ii->", h[np.ix_(inact, inact)])
        v_iijj = v[np.ix_(inact, inact, inact, inact)]
        e_core += 2.0 * np.einsum("iijj->", v_iijj) - np.einsum("ijji->", v_iijj)

    h_eff = h[np.ix_(act, act)].copy()
    if inact:
        h_eff += 2.0 * np.einsum("uvii->uv", v[np.ix_(act, act, inact, inact)])
        h_eff -= np.einsum("uiiv->uv", v[np.ix_(act, inact, inact, act)])
    v_act = v[np.ix_(act, act, act, act)].copy()
    return EmbeddedHamiltonian(
        e_core=float(e_core), h_eff=h_eff, v_act=v_act,
        n_active_elec=cas.n_active_elec, ms2=ints.ms2,
    )


def rotate_orbitals(ints: IntegralSet, kappa: np.ndarray) -> tuple[IntegralSet, np.ndarray]:
    """Transform the integrals by the orthogonal rotation U = exp(kappa).

    New orbital q is the column combination ``|q'> = sum_p |p> U[p, q]``.

    Args:
        kappa: (n_orb, n_orb) real antisymmetric generator.

    Returns:
        (rotated IntegralSet, U) with U the explicit rotation matrix.
    """
    n = ints.n_orb
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (n, n):
        raise ValueError(f"kappa shape {kappa.shape} != ({n}, {n})")
    if np.max(np.abs(kappa + kappa.T)) > 1e-12:
        raise ValueError("kappa must be antisymmetric")
    u = scipy.linalg.expm(kappa)
    return apply_orbital_rotation(ints, u), u


def apply_orbital_rotation(ints: IntegralSet, u: np.ndarray) -> IntegralSet:
    """Transform integrals by an explicit orthogonal matrix ``u``."""
    n = ints.n_orb
    if u.shape != (n, n):
        raise ValueError(f"rotation shape {u.shape} != ({n}, {n})")
    if np.max(np.abs(u.T @ u - np.eye(n))) > 1e-10:
        raise ValueError("rotation matrix is not orthogonal")
    h2 = u.T @ ints.h @ u
    v2 = np.einsum("ap,abcd->pbcd", u, ints.v, optimize=True)
    v2 = np.einsum("bq,pbcd->pqcd", u, v2, optimize=True)
    v2 = np.einsum("cr,pqcd->pqrd", u, v2, optimize=True)
    v2 = np.einsum("ds,pqrd->pqrs", u, v2, optimize=True)
    # Symmetrize away accumulated roundoff so downstream symmetry checks
    # stay well below their tolerance.
    v2 = 0.5 * (v2 + v2.transpose(1, 0, 3, 2))
    v2 = 0.5 * (v2 + v2.transpose(2, 3, 0, 1))
    return IntegralSet(
        n_orb=n, n_elec=ints.n_elec, ms2=ints.ms2,
        core_energy=ints.core_energy, h=h2, v=v2, orbsym=ints.orbsym,
    )


def determinant_energy(ints: IntegralSet, occ_alpha: list[int], occ_beta: list[int]) -> float:
    """Energy of a single Slater determinant with the given spatial occupations."""
    h, v = ints.h, ints.v
    e = ints.core_energy
    for occ in (occ_alpha, occ_beta):
        e += sum(h[p, p] for p in occ)
    for occ in (occ_alpha, occ_beta):
        e += 0.5 * sum(
            v[p, p, q, q] - v[p, q, q, p] for p in occ for q in occ
        )
    e += sum(v[p, p, q, q] for p in occ_alpha for q in occ_beta)
    return float(e)


def rhf_determinant_energy(ints: IntegralSet) -> float:
    """Closed-shell determinant energy with the lowest n_elec/2 orbitals occupied."""
    if ints.n_elec % 2:
        raise ValueError("closed-shell energy requires an even electron count")
    occ = list(range(ints.n_elec // 2))
    return determinant_energy(ints, occ, occ)
