"""File formats: config parsing, frozen CSV/JSON contracts, matrix export.

All delimited outputs format floats with ``repr`` (shortest round-trip), so
identical inputs produce byte-identical files.  Column orders are frozen;
downstream plotting depends only on these contracts.

The configuration format is INI (configparser) with a ``[meta]`` section
carrying ``schema_version``.  Network instances round-trip through the
``[network]`` section.
"""

from __future__ import annotations

import configparser
import io
import json
from pathlib import Path

import numpy as np

from .errors import SpecificationError
from .networks import CouplingMatrix, NetworkSpec

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# low-level value helpers
# ---------------------------------------------------------------------------


def fmt(value) -> str:
    """Deterministic scalar formatting for delimited output."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def parse_values(text: str) -> list[float]:
    """Parse 'a,b,c' lists or 'lo:hi:n' linspace shorthand."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SpecificationError(f"range syntax is lo:hi:n, got {text!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(v) for v in np.linspace(lo, hi, n)]
    return [float(v) for v in text.split(",") if v.strip()]


def write_csv(path: Path, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# network spec <-> config
# ---------------------------------------------------------------------------


def load_config(path: str | Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    found = cp.read(path)
    if not found:
        raise SpecificationError(f"config file not found: {path}")
    version = cp.get("meta", "schema_version", fallback=None)
    if version is None:
        raise SpecificationError("config missing [meta] schema_version")
    if int(version) != SCHEMA_VERSION:
        raise SpecificationError(
            f"config schema_version {version} unsupported (expected {SCHEMA_VERSION})")
    return cp


def spec_from_config(cp: configparser.ConfigParser, section: str = "network") -> NetworkSpec:
    if not cp.has_section(section):
        raise SpecificationError(f"config missing [{section}] section")
    sec = cp[section]
    try:
        kind = sec.get("kind", "ssh").strip()
        length = sec.getint("length")
        kwargs: dict = {}
        for key in ("w", "t", "omega"):
            if key in sec:
                vals = parse_values(sec[key])
                kwargs[key] = vals[0] if len(vals) == 1 else np.asarray(vals)
        for key in ("delta", "omega_edge", "omega_barrier", "domega"):
            if key in sec:
                kwargs[key] = sec.getfloat(key)
        return NetworkSpec(kind=kind, length=length, **kwargs)
    except (ValueError, TypeError) as exc:
        raise SpecificationError(f"invalid [{section}] entry: {exc}") from exc


def spec_to_config(spec: NetworkSpec) -> str:
    """Render a network spec as its configuration-file section."""
    buf = io.StringIO()
    buf.write(f"[meta]\nschema_version = {SCHEMA_VERSION}\n\n[network]\n")
    buf.write(f"kind = {spec.kind}\nlength = {spec.length}\n")
    buf.write(f"w = {','.join(fmt(v) for v in spec.w)}\n")
    if spec.length > 1:
        buf.write(f"t = {','.join(fmt(v) for v in spec.t)}\n")
    buf.write(f"delta = {fmt(spec.delta)}\n")
    buf.write(f"omega = {','.join(fmt(v) for v in spec.omega)}\n")
    if spec.kind == "barrier":
        buf.write(f"omega_edge = {fmt(spec.omega_edge)}\n")
        buf.write(f"omega_barrier = {fmt(spec.omega_barrier)}\n")
    if spec.kind == "mc":
        buf.write(f"domega = {fmt(spec.domega)}\n")
    return buf.getvalue()


def spec_from_file(path: str | Path) -> NetworkSpec:
    return spec_from_config(load_config(path))


# ---------------------------------------------------------------------------
# dense matrix text format
# ---------------------------------------------------------------------------


def write_matrix(path: str | Path, matrix: CouplingMatrix) -> None:
    """Row-major dense text format, one row per line, '#'-prefixed header."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# kind {matrix.kind}\n")
        fh.write(f"# basis {' '.join(matrix.basis_labels)}\n")
        fh.write(f"# parity {' '.join('+1' if p > 0 else '-1' for p in matrix.parity)}\n")
        fh.write(f"# reference_energy {fmt(matrix.reference_energy)}\n")
        fh.write(f"# claims_sublattice {fmt(matrix.claims_sublattice)}\n")
        for row in matrix.entries:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_matrix(path: str | Path) -> CouplingMatrix:
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, rest = line[1:].strip().partition(" ")
                meta[key] = rest
            else:
                rows.append([float(v) for v in line.split()])
    entries = np.asarray(rows)
    labels = meta.get("basis", "").split()
    parity = np.asarray([int(v) for v in meta.get("parity", "").split()] or [1] * len(labels))
    return CouplingMatrix(
        entries=entries,
        basis_labels=labels,
        parity=parity,
        kind=meta.get("kind", "ssh"),
        claims_sublattice=meta.get("claims_sublattice", "false") == "true",
        reference_energy=float(meta.get("reference_energy", "0.0")),
    )


# ---------------------------------------------------------------------------
# lattice edge-list format
# ---------------------------------------------------------------------------


def write_lattice(path: str | Path, lattice) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# geometry {lattice.geometry}\n")
        fh.write(f"# tbar {fmt(lattice.tbar)}\n")
        for i, (label, par) in enumerate(zip(lattice.labels, lattice.parity)):
            fh.write(f"# node {i} {label} {'+1' if par > 0 else '-1'}\n")
        for t in lattice.terminals:
            fh.write(f"# terminal {t.name} {t.node}\n")
        for e in lattice.edges:
            fh.write(f"{e.a} {e.b} {fmt(e.amplitude)} {e.role}\n")


def read_lattice(path: str | Path):
    from .lattice import Edge, Lattice2D, Terminal

    labels: list[str] = []
    parity: list[int] = []
    terminals: list[Terminal] = []
    edges: list[Edge] = []
    geometry, tbar = "boundary_terminals", 1.0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[0] == "geometry":
                    geometry = parts[1]
                elif parts[0] == "tbar":
                    tbar = float(parts[1])
                elif parts[0] == "node":
                    labels.append(parts[2])
                    parity.append(int(parts[3]))
                elif parts[0] == "terminal":
                    terminals.append(Terminal(parts[1], int(parts[2])))
            else:
                a, b, amp, role = line.split()
                edges.append(Edge(int(a), int(b), float(amp), role))
    return Lattice2D(geometry=geometry, labels=labels, parity=np.asarray(parity),
                     edges=edges, terminals=terminals, tbar=tbar)


# ---------------------------------------------------------------------------
# report exports
# ---------------------------------------------------------------------------


def export_spectral_csv(path: Path, report) -> None:
    rows = []
    for i, val in enumerate(report.eigenvalues):
        rows.append([i, float(val), 1 if i in report.edge_indices else 0])
    write_csv(path, ["index", "eigenvalue", "edge_flag"], rows)


def export_spectral_json(path: Path, report) -> None:
    write_json(path, {
        "edge_splitting": report.edge_splitting,
        "bulk_gap": report.bulk_gap,
        "gap_ratio": report.gap_ratio,
        "reference_energy": report.reference_energy,
        "flags": report.flags,
    })


def export_timeseries_csv(path: Path, timeseries: np.ndarray, labels: list[str]) -> None:
    columns = ["t"] + [f"p_{lab}" for lab in labels]
    write_csv(path, columns, timeseries)


SWEEP_COLUMNS = ["tau", "param", "fidelity", "phase", "edge_weight", "note"]


def export_sweep_csv(path: Path, results, taus, params) -> None:
    """Results come in (param outer, tau inner) order from dynamics.sweep."""
    rows = []
    k = 0
    for param in params:
        for tau in taus:
            res = results[k]
            k += 1
            if isinstance(res, Exception):
                rows.append([float(tau), float(param), float("nan"), float("nan"),
                             float("nan"), f"error: {res}"])
            else:
                rows.append([res.tau, res.param, res.fidelity, res.phase,
                             res.edge_weight, ""])
    write_csv(path, SWEEP_COLUMNS, rows)


SCALING_COLUMNS = ["length", "tau", "bound_constant", "loss_bound", "simulated_loss"]


def export_scaling_csv(path: Path, rows: list[dict]) -> None:
    write_csv(path, SCALING_COLUMNS,
              [[r["length"], r["tau"], r["bound_constant"], r["loss_bound"],
                r["simulated_loss"]] for r in rows])


def export_gate_report(path: Path, report) -> None:
    write_json(path, {
        "gate": report.gate,
        "length": report.length,
        "fidelity": report.fidelity,
        "transfer_fidelity": report.transfer_fidelity,
        "local_phase": report.local_phase,
        "state_fidelities": report.state_fidelities,
        "stages": [
            {
                "name": s.name,
                "duration": s.duration,
                "phase": s.phase,
                "expected_phase": s.expected_phase,
                "max_bulk_admixture": s.max_bulk_admixture,
            }
            for s in report.stages
        ],
        "truth_table_real": np.real(report.truth_table),
        "truth_table_imag": np.imag(report.truth_table),
        "warnings": report.warnings,
    })
