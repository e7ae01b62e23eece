"""Batch drivers and result emission: single-point runs, geometry scans
and method comparison tables.

All emitted files are deterministic: the same configuration against the
same inputs produces byte-identical output, so records carry work counts
rather than wall-clock times.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from . import __version__
from .ac import ErpaInstabilityError, ac0_correction, ac_correction
from .ansatz import empty_circuit, fermionic_pool, qubit_pool, uccsd_circuit
from .exactsolver import (DeterminantSpace, casci_ground_state, rdms_from_ci,
                          sector_occupations)
from .integrals import (ActiveSpace, FcidumpError, IntegralSet,
                        determinant_energy, embed_active_space, load_fcidump)
from .orbital_opt import OrbitalOptError, optimize_orbitals
from .rdm import measure_rdms
from .vqe import VqeProblem, adapt_vqe, minimize_vqe

__all__ = [
    "ConfigError",
    "NumericalFailure",
    "RunConfig",
    "run_single",
    "run_scan",
    "emit_comparison_table",
    "main",
]

METHODS = ("hf", "fci", "casci", "casscf", "uccsd", "oo-uccd",
           "adapt", "qubit-adapt")
CORRECTIONS = ("none", "ac0", "ac")

# corrections assume the reference RDMs already sit at a stationary point
# of the active-space problem; anything else needs an explicit override
CORRECTION_READY = {"fci", "casci", "casscf", "oo-uccd"}

FULL_CI_ROW_LIMIT = 40000


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


class NumericalFailure(RuntimeError):
    """A solver failed to produce a trustworthy number (exit code 3)."""


@dataclass
class RunConfig:
    """One pipeline invocation.

    Attributes:
        fcidump: integral file path.
        method: reference method name.
        correction: post-reference correlation correction.
        cas: (n_active_elec, n_active_orb) or None for the full space.
        ms2: spin-sector override; None keeps the value from the file.
        force: allow corrections on references outside CORRECTION_READY.
        ac_nodes: quadrature nodes for the integrated correction.
        adapt_threshold: pool-gradient stopping threshold.
        adapt_max_operators: adaptive-growth operator cap.
        out: output path for the emitted record, None for stdout.
    """

    fcidump: str
    method: str = "fci"
    correction: str = "none"
    cas: tuple[int, int] | None = None
    ms2: int | None = None
    force: bool = False
    ac_nodes: int = 5
    adapt_threshold: float = 1e-4
    adapt_max_operators: int = 60
    out: str | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.correction not in CORRECTIONS:
            raise ConfigError(
                f"unknown correction {self.correction!r}; choose from {CORRECTIONS}")
        if self.cas is not None:
            n_e, n_o = self.cas
            if n_e < 0 or n_o <= 0:
                raise ConfigError(f"invalid active space {self.cas}")
        if (self.correction != "none" and self.method not in CORRECTION_READY
                and not self.force):
            raise ConfigError(
                f"correction {self.correction!r} expects an orbital-optimized or "
                f"exact active-space reference, not {self.method!r}; "
                "pass --force to override")
        if self.ac_nodes < 1:
            raise ConfigError("ac_nodes must be positive")


def _config_from_sources(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
    if getattr(args, "fcidump", None):
        data["fcidump"] = args.fcidump
    if args.method:
        data["method"] = args.method
    if args.correction:
        data["correction"] = args.correction
    if args.cas:
        data["cas"] = args.cas
    if getattr(args, "force", False):
        data["force"] = True
    if args.out:
        data["out"] = args.out
    if "fcidump" not in data:
        raise ConfigError("no fcidump path given (config file or positional)")
    if "cas" in data and data["cas"] is not None:
        data["cas"] = _parse_cas(data["cas"])
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


def _parse_cas(value) -> tuple[int, int]:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 2:
        raise ConfigError(f"active space must be 'n_elec,n_orb', got {value!r}")
    try:
        return int(parts[0]), int(parts[1])
    except (TypeError, ValueError):
        raise ConfigError(f"active space must be two integers, got {value!r}")


def _load_integrals(cfg: RunConfig) -> IntegralSet:
    try:
        ints = load_fcidump(cfg.fcidump)
    except (OSError, FcidumpError) as exc:
        raise ConfigError(f"cannot load integrals: {exc}")
    if cfg.ms2 is not None and cfg.ms2 != ints.ms2:
        ints = dataclasses.replace(ints, ms2=int(cfg.ms2))
    return ints


def _active_space(cfg: RunConfig, ints: IntegralSet) -> ActiveSpace:
    if cfg.cas is None:
        return ActiveSpace.build(ints.n_orb, ints.n_elec, ints.n_elec, ints.n_orb)
    n_e, n_o = cfg.cas
    try:
        return ActiveSpace.build(ints.n_orb, ints.n_elec, n_e, n_o)
    except ValueError as exc:
        raise ConfigError(f"invalid active space: {exc}")


@dataclass
class _Execution:
    e_ref: float
    ints_final: IntegralSet
    d_act: np.ndarray
    p_act: np.ndarray
    cnots: int
    traces: dict
    counters: dict


def _hf_execution(ints: IntegralSet, cas: ActiveSpace) -> _Execution:
    n_alpha, n_beta = sector_occupations(ints.n_elec, ints.ms2)
    occ_a = list(range(n_alpha))
    occ_b = list(range(n_beta))
    energy = determinant_energy(ints, occ_a, occ_b)
    act = list(cas.active)
    na_act, nb_act = sector_occupations(cas.n_active_elec, ints.ms2)
    space = DeterminantSpace(len(act), na_act, nb_act)
    alpha_ref = (1 << na_act) - 1
    beta_ref = (1 << nb_act) - 1
    c = np.zeros(space.dim)
    c[space.alpha_index(alpha_ref) * space.n_bstr + space.beta_index(beta_ref)] = 1.0
    d_act, p_act = rdms_from_ci(space, c)
    return _Execution(energy, ints, d_act, p_act, 0,
                      {}, {"inner_evaluations": 0})


def _exact_execution(ints: IntegralSet, cas: ActiveSpace) -> _Execution:
    emb = embed_active_space(ints, cas)
    res = casci_ground_state(emb)
    if not res.converged:
        raise NumericalFailure("eigensolver did not converge")
    d_act, p_act = rdms_from_ci(res.space, res.ci)
    return _Execution(res.energy, ints, d_act, p_act, 0,
                      {}, {"inner_evaluations": res.n_iterations})


def _uccsd_execution(ints: IntegralSet, cas: ActiveSpace) -> _Execution:
    emb = embed_active_space(ints, cas)
    circuit = uccsd_circuit(emb.n_active_orb, emb.n_active_elec, emb.ms2)
    problem = VqeProblem(emb, circuit)
    res = minimize_vqe(problem)
    if not res.converged:
        raise NumericalFailure("variational optimization did not converge")
    d_act, p_act = measure_rdms(problem, problem.prepare(res.thetas))
    traces = {"grad_norm": _sig(res.grad_norm), "iterations": res.n_iterations}
    return _Execution(res.energy, ints, d_act, p_act, circuit.cnot_count(),
                      traces, {"inner_evaluations": problem.n_energy_evaluations})


def _adapt_execution(ints: IntegralSet, cas: ActiveSpace, cfg: RunConfig,
                     kind: str) -> _Execution:
    emb = embed_active_space(ints, cas)
    circuit = empty_circuit(emb.n_active_orb, emb.n_active_elec, emb.ms2)
    if kind == "qubit":
        pool = qubit_pool(emb.n_active_orb, emb.n_active_elec, emb.ms2)
    else:
        pool = fermionic_pool(emb.n_active_orb, emb.n_active_elec, emb.ms2)
    res = adapt_vqe(emb, circuit, pool,
                    grad_threshold=cfg.adapt_threshold,
                    max_operators=cfg.adapt_max_operators)
    problem = VqeProblem(emb, res.circuit)
    d_act, p_act = measure_rdms(problem, problem.prepare(res.thetas))
    traces = {
        "selections": [it.selected for it in res.history],
        "energies": [_sig(it.energy) for it in res.history],
        "converged": res.converged,
    }
    return _Execution(res.energy, ints, d_act, p_act,
                      res.circuit.cnot_count(), traces,
                      {"adapt_operators": len(res.history)})


def _orbital_opt_execution(ints: IntegralSet, cas: ActiveSpace,
                           flavor: str) -> _Execution:
    try:
        res = optimize_orbitals(ints, cas, solver=flavor)
    except OrbitalOptError as exc:
        raise NumericalFailure(f"orbital optimization failed: {exc}")
    cnots = 0
    if flavor == "uccd":
        emb = embed_active_space(res.ints, cas)
        cnots = uccsd_circuit(emb.n_active_orb, emb.n_active_elec, emb.ms2,
                              include_singles=False).cnot_count()
    # the macro-iteration cap is a sanctioned loop exit for the two-step
    # scheme; the trace carries the flag so downstream readers can tell
    traces = {"macro_energies": [_sig(m.energy) for m in res.trace],
              "converged": res.converged}
    return _Execution(res.energy, res.ints, res.solution.d_act,
                      res.solution.p_act, cnots, traces,
                      {"macro_iterations": res.n_macro})


def _execute(cfg: RunConfig, ints: IntegralSet, cas: ActiveSpace) -> _Execution:
    if cfg.method == "hf":
        return _hf_execution(ints, cas)
    if cfg.method == "fci":
        full = ActiveSpace.build(ints.n_orb, ints.n_elec, ints.n_elec, ints.n_orb)
        return _exact_execution(ints, full)
    if cfg.method == "casci":
        return _exact_execution(ints, cas)
    if cfg.method == "casscf":
        return _orbital_opt_execution(ints, cas, "casci")
    if cfg.method == "uccsd":
        return _uccsd_execution(ints, cas)
    if cfg.method == "oo-uccd":
        return _orbital_opt_execution(ints, cas, "uccd")
    if cfg.method == "adapt":
        return _adapt_execution(ints, cas, cfg, "fermionic")
    if cfg.method == "qubit-adapt":
        return _adapt_execution(ints, cas, cfg, "qubit")
    raise ConfigError(f"unknown method {cfg.method!r}")


def _sig(x: float) -> float:
    """Round to the emitted precision of 12 significant digits."""
    return float(f"{float(x):.12g}")


def run_single(cfg: RunConfig) -> dict:
    """Execute one configured pipeline and return the result record."""
    cfg.validate()
    ints = _load_integrals(cfg)
    cas = _active_space(cfg, ints)
    execution = _execute(cfg, ints, cas)

    e_corr = 0.0
    correction_detail: dict = {}
    if cfg.correction != "none":
        try:
            if cfg.correction == "ac0":
                corr = ac0_correction(execution.ints_final, cas,
                                      execution.d_act, execution.p_act)
                correction_detail = {
                    "blocks": {k: _sig(v) for k, v in sorted(corr.blocks.items())},
                    "skipped_blocks": list(corr.skipped_blocks),
                    "method": corr.method,
                }
            else:
                corr = ac_correction(execution.ints_final, cas,
                                     execution.d_act, execution.p_act,
                                     n_nodes=cfg.ac_nodes)
                correction_detail = {
                    "blocks": {k: _sig(v) for k, v in sorted(corr.blocks.items())},
                    "nodes": [_sig(a) for a in corr.nodes],
                    "integrand": [_sig(w) for w in corr.integrand],
                    "method": corr.method,
                }
            e_corr = corr.e_corr
        except ErpaInstabilityError as exc:
            raise NumericalFailure(f"response problem unstable: {exc}")

    record = {
        "fcidump": str(cfg.fcidump),
        "method": cfg.method,
        "correction": cfg.correction,
        "cas": list(cfg.cas) if cfg.cas else [ints.n_elec, ints.n_orb],
        "ms2": ints.ms2,
        "e_ref": _sig(execution.e_ref),
        "e_corr": _sig(e_corr),
        "e_total": _sig(execution.e_ref + e_corr),
        "cnots": execution.cnots,
        "traces": execution.traces,
        "correction_detail": correction_detail,
        "timings": execution.counters,
        "versions": {"vqeac": __version__},
    }
    return record


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def record_json(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------- scans

def _method_label(entry: dict) -> str:
    label = entry["method"]
    if entry.get("correction", "none") != "none":
        label += "-" + entry["correction"]
    return label


def run_scan(scan_config: dict) -> str:
    """CSV over a geometry series: one row per fixture per method entry.

    The scan configuration carries ``fixtures`` (list of {parameter,
    fcidump}, pre-ordered by parameter), ``methods`` (list of {method,
    correction?}), and optional shared keys (cas, ms2, force, ac_nodes).
    Correlation recovery is reported against Hartree-Fock and full CI
    computed per geometry when the determinant space stays tractable.
    """
    fixtures = scan_config.get("fixtures")
    methods = scan_config.get("methods")
    if not fixtures or not methods:
        raise ConfigError("scan config needs non-empty 'fixtures' and 'methods'")
    shared = {k: scan_config[k] for k in
              ("cas", "ms2", "force", "ac_nodes", "adapt_threshold",
               "adapt_max_operators") if k in scan_config}

    rows = []
    for fixture in fixtures:
        parameter = fixture["parameter"]
        path = fixture["fcidump"]
        base_cfg = dict(shared)
        base_cfg["fcidump"] = path
        if "cas" in base_cfg and base_cfg["cas"] is not None:
            base_cfg["cas"] = _parse_cas(base_cfg["cas"])

        e_hf = run_single(RunConfig(**{**base_cfg, "method": "hf",
                                       "correction": "none"}))["e_total"]
        ints = _load_integrals(RunConfig(**base_cfg))
        n_alpha, n_beta = sector_occupations(ints.n_elec, ints.ms2)
        fci_dim = comb(ints.n_orb, n_alpha) * comb(ints.n_orb, n_beta)
        e_fci = None
        if fci_dim <= FULL_CI_ROW_LIMIT:
            e_fci = run_single(RunConfig(**{**base_cfg, "method": "fci",
                                            "correction": "none"}))["e_total"]

        for entry in methods:
            cfg = RunConfig(**{**base_cfg,
                               "method": entry["method"],
                               "correction": entry.get("correction", "none")})
            record = run_single(cfg)
            pct = ""
            if e_fci is not None and abs(e_fci - e_hf) > 1e-14:
                recovered = 100.0 * (record["e_total"] - e_hf) / (e_fci - e_hf)
                pct = f"{_sig(recovered) + 0.0:.12g}"
            rows.append((f"{_sig(parameter):.12g}", _method_label(entry),
                         f"{record['e_total']:.12g}", f"{record['e_corr']:.12g}",
                         pct))

    lines = ["parameter,method,E_total,E_corr,pct_correlation"]
    lines += [",".join(row) for row in rows]
    return "\n".join(lines) + "\n"


GNUPLOT_STUB = """\
# gnuplot stub for a geometry scan; filters one method per curve
# usage: gnuplot -e "csv='scan.csv'; method='fci'" this_file.gp
set datafile separator ','
set key autotitle columnhead
set xlabel 'geometry parameter'
set ylabel 'E_total [Ha]'
plot sprintf("< awk -F, 'NR==1 || $2==\\"%s\\"' %s", method, csv) \\
     using 1:3 with linespoints title method
"""


# ----------------------------------------------------------------- tables

def emit_comparison_table(records: list[dict]) -> str:
    """Aligned method comparison; adds spin-gap rows when a method appears
    in exactly two spin sectors."""
    header = ("method", "correction", "ms2", "E_ref [Ha]", "E_corr [Ha]",
              "E_total [Ha]", "CNOTs")
    body: list[tuple] = []
    for rec in records:
        body.append((rec["method"], rec["correction"], str(rec.get("ms2", 0)),
                     f"{rec['e_ref']:.12g}", f"{rec['e_corr']:.12g}",
                     f"{rec['e_total']:.12g}", str(rec.get("cnots", 0))))

    by_method: dict[tuple, dict[int, float]] = {}
    for rec in records:
        key = (rec["method"], rec["correction"])
        by_method.setdefault(key, {})[int(rec.get("ms2", 0))] = rec["e_total"]
    for (method, correction), sectors in sorted(by_method.items()):
        if len(sectors) == 2:
            (ms2_lo, e_lo), (ms2_hi, e_hi) = sorted(sectors.items())
            body.append((f"gap({method})", correction,
                         f"{ms2_hi}-{ms2_lo}", "", "",
                         f"{_sig(e_hi - e_lo):.12g}", ""))

    widths = [len(h) for h in header]
    for row in body:
        widths = [max(w, len(str(c))) for w, c in zip(widths, row)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header).rstrip()]
    lines += [fmt.format(*row).rstrip() for row in body]
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- main

def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", default=None, help="JSON config file")
    sub.add_argument("--method", default=None, choices=METHODS)
    sub.add_argument("--correction", default=None, choices=CORRECTIONS)
    sub.add_argument("--cas", default=None, help="active space as n_elec,n_orb")
    sub.add_argument("--force", action="store_true",
                     help="allow corrections on non-stationary references")
    sub.add_argument("--out", default=None, help="output file (default stdout)")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="vqeac",
        description="Active-space eigensolver pipeline with correlation corrections.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="single-point run emitting a JSON record")
    p_run.add_argument("fcidump", nargs="?", default=None)
    _add_common_flags(p_run)

    p_fci = subs.add_parser("fci", help="exact diagonalization of an integral file")
    p_fci.add_argument("fcidump")
    p_fci.add_argument("--cas", default=None, help="active space as n_elec,n_orb")
    p_fci.add_argument("--out", default=None)

    p_scan = subs.add_parser("scan", help="geometry scan emitting CSV")
    p_scan.add_argument("--config", required=True, help="scan config JSON")
    p_scan.add_argument("--out", default=None)
    p_scan.add_argument("--gnuplot", default=None,
                        help="also write a gnuplot script stub to this path")

    p_table = subs.add_parser("table", help="comparison table from JSON records")
    p_table.add_argument("records", nargs="*", help="record files from 'run'")
    p_table.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_sources(args)
            record = run_single(cfg)
            _emit(record_json(record), cfg.out)
        elif args.command == "fci":
            cas = _parse_cas(args.cas) if args.cas else None
            method = "casci" if cas else "fci"
            cfg = RunConfig(fcidump=args.fcidump, method=method, cas=cas,
                            out=args.out)
            cfg.validate()
            record = run_single(cfg)
            _emit(record_json(record), cfg.out)
        elif args.command == "scan":
            try:
                scan_config = json.loads(Path(args.config).read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read scan config: {exc}")
            except json.JSONDecodeError as exc:
                raise ConfigError(f"scan config is not valid JSON: {exc}")
            csv_text = run_scan(scan_config)
            _emit(csv_text, args.out)
            if args.gnuplot:
                Path(args.gnuplot).write_text(GNUPLOT_STUB)
        elif args.command == "table":
            records = []
            for path in args.records:
                try:
                    records.append(json.loads(Path(path).read_text()))
                except (OSError, json.JSONDecodeError) as exc:
                    raise ConfigError(f"cannot read record {path}: {exc}")
            _emit(emit_comparison_table(records), args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
