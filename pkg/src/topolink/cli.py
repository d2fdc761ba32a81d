"""Batch command-line front end.

Every subcommand reads one INI config, writes CSV/JSON artifacts plus a run
manifest into the output directory, and exits 0 on success, 2 on a config
error, 3 on a numerical failure.  Identical config and seed produce
byte-identical data files; the manifest additionally records wall-clock.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, fileio
from .dynamics import evolve, sweep
from .errors import IntegrationError, QuadratureError, RootNotFoundError, SpecificationError
from .gates import GateEngine, cp_gate, swap_gate
from .lattice import (
    BOUNDARY,
    EMANATING,
    add_parity_breaking_edge,
    build_honeycomb,
    check_path_parity,
    find_path,
    activate_path,
    verify_obstruction,
)
from .networks import DisorderConfig, NetworkSpec, build_network
from .protocols import (
    ProtocolSchedule,
    Pulse,
    adiabatic_bound,
    fit_growth_exponent,
    scaling_study,
)
from .spectral import diagonalize, plan_ratio, solve_rescaled
from .studies import disorder_transfer_study, outermost_branch, simulated_loss

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _pulse_from_config(cp) -> Pulse:
    if not cp.has_section("pulse"):
        return Pulse()
    sec = cp["pulse"]
    family = sec.get("family", "sine_squared").strip()
    if family == "smoothed_order_n":
        return Pulse(family=family, order=sec.getint("order", 4))
    if family == "tabulated":
        samples_file = sec.get("samples_file")
        if not samples_file:
            raise SpecificationError("tabulated pulse needs samples_file")
        header, rows = fileio.read_csv(Path(samples_file))
        samples = tuple((float(r[0]), float(r[1])) for r in rows)
        return Pulse(family=family, samples=samples)
    return Pulse(family=family)


def _schedule_kwargs(cp) -> dict:
    if not cp.has_section("schedule"):
        raise SpecificationError("config missing [schedule] section")
    sec = cp["schedule"]
    kwargs = {}
    for key in ("dw_min", "w_max", "w_floor", "omega_barrier_min", "omega_barrier_max",
                "t_max", "domega_max"):
        if key in sec:
            kwargs[key] = sec.getfloat(key)
    return kwargs


def _run_meta(cp, args) -> tuple[int, int, int | None, int]:
    sec = cp["run"] if cp.has_section("run") else {}
    seed = args.seed if args.seed is not None else int(sec.get("seed", 0))
    workers = args.workers if args.workers is not None else int(sec.get("workers", 1))
    steps_raw = args.steps if args.steps is not None else int(sec.get("steps", 0))
    steps = steps_raw if steps_raw > 0 else None
    frames = int(sec.get("frames", 200))
    return seed, workers, steps, frames


def _manifest(out: Path, command: str, cp, seed: int, outputs: list[str], t0: float) -> None:
    config_dump = {s: dict(cp[s]) for s in cp.sections()}
    fileio.write_json(out / "run_manifest.json", {
        "command": command,
        "config": config_dump,
        "seed": seed,
        "tool_version": __version__,
        "schema_version": fileio.SCHEMA_VERSION,
        "outputs": sorted(outputs),
        "wall_clock_s": time.monotonic() - t0,
    })


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_transfer(cp, out: Path, args) -> list[str]:
    seed, workers, steps, frames = _run_meta(cp, args)
    spec = fileio.spec_from_config(cp)
    pulse = _pulse_from_config(cp)
    tau = cp["schedule"].getfloat("tau")
    sched = ProtocolSchedule(spec, pulse, tau, **_schedule_kwargs(cp))
    report = evolve(sched, steps=steps, n_frames=frames)
    fileio.export_timeseries_csv(out / "timeseries.csv", report.timeseries, sched.labels)
    fileio.write_json(out / "summary.json", {
        "fidelity": report.fidelity,
        "phase": report.phase,
        "edge_weight": report.edge_weight,
        "bulk_loss": 1.0 - report.edge_weight,
        "tau": report.tau,
        "steps": report.steps,
        "norm_drift": report.norm_drift,
        "kind": spec.kind,
        "length": spec.length,
    })
    return ["timeseries.csv", "summary.json"]


def cmd_sweep(cp, out: Path, args) -> list[str]:
    seed, workers, steps, _ = _run_meta(cp, args)
    spec = fileio.spec_from_config(cp)
    pulse = _pulse_from_config(cp)
    sec = cp["sweep"]
    param_name = sec.get("param", "dw_min").strip()
    params = fileio.parse_values(sec.get("param_values"))
    taus = fileio.parse_values(sec.get("tau_values"))

    def factory(param, tau):
        return ProtocolSchedule(spec, pulse, tau, **{param_name: float(param)})

    results = sweep(factory, params, taus, steps=steps, workers=workers)
    fileio.export_sweep_csv(out / "sweep.csv", results, taus, params)
    ok = [r for r in results if not isinstance(r, Exception)]
    fileio.write_json(out / "summary.json", {
        "param": param_name,
        "n_params": len(params),
        "n_taus": len(taus),
        "n_failed": len(results) - len(ok),
        "max_fidelity": max((r.fidelity for r in ok), default=float("nan")),
    })
    return ["sweep.csv", "summary.json"]


def cmd_spectrum(cp, out: Path, args) -> list[str]:
    sec = cp["spectrum"] if cp.has_section("spectrum") else {}
    mode = sec.get("mode", "network").strip() if sec else "network"
    outputs = []
    if mode == "network":
        spec = fileio.spec_from_config(cp)
        report = diagonalize(build_network(spec))
        fileio.export_spectral_csv(out / "eigenvalues.csv", report)
        fileio.export_spectral_json(out / "summary.json", report)
        fileio.write_matrix(out / "matrix.txt", build_network(spec))
        outputs += ["eigenvalues.csv", "summary.json", "matrix.txt"]
    elif mode == "rescaled":
        dw_values = fileio.parse_values(sec.get("dw_values", "0.5:6.0:56"))
        rows = []
        for dw in dw_values:
            sol = solve_rescaled(float(dw))
            rows.append([sol.dw_scaled, sol.level0, sol.level1,
                         2.0 * sol.level0, sol.level1 - sol.level0])
        fileio.write_csv(out / "rescaled_scan.csv",
                         ["dw_scaled", "level0", "level1", "edge_scale", "bulk_scale"], rows)
        summary = {"n_points": len(rows)}
        if "ratio_target" in sec:
            target = float(sec.get("ratio_target"))
            planned = plan_ratio(target)
            summary.update({"ratio_target": target, "dw_planned": planned})
        fileio.write_json(out / "summary.json", summary)
        outputs += ["rescaled_scan.csv", "summary.json"]
    else:
        raise SpecificationError(f"unknown spectrum mode {mode!r}")
    return outputs


def cmd_bound(cp, out: Path, args) -> list[str]:
    sec = cp["bound"]
    pulse = _pulse_from_config(cp)
    lengths = [int(v) for v in fileio.parse_values(sec.get("lengths"))]
    dw = sec.getfloat("dw_scaled_min")
    c1, c2 = sec.getfloat("c1", 1.0), sec.getfloat("c2", 1.0)
    tau = sec.getfloat("tau", 0.0) or None
    rows = []
    for L in lengths:
        rep = adiabatic_bound(pulse, L, dw, c1=c1, c2=c2, tau=tau)
        rows.append({
            "length": L,
            "tau": tau if tau is not None else float("nan"),
            "bound_constant": rep.bound_constant,
            "loss_bound": rep.loss_bound if rep.loss_bound is not None else float("nan"),
            "simulated_loss": float("nan"),
        })
    fileio.export_scaling_csv(out / "bound.csv", rows)
    exponent = fit_growth_exponent(lengths, [r["bound_constant"] for r in rows])
    fileio.write_json(out / "summary.json", {
        "pulse": pulse.label,
        "dw_scaled_min": dw,
        "fit_exponent": exponent,
    })
    return ["bound.csv", "summary.json"]


def cmd_scaling(cp, out: Path, args) -> list[str]:
    seed, workers, steps, _ = _run_meta(cp, args)
    sec = cp["scaling"]
    pulse = _pulse_from_config(cp)
    alphas = fileio.parse_values(sec.get("alphas", "0,0.5,1"))
    tau0s = fileio.parse_values(sec.get("tau0", "2.0,0.7,0.25"))
    if len(tau0s) == 1:
        tau0s = tau0s * len(alphas)
    lengths = [int(v) for v in fileio.parse_values(sec.get("lengths", "5,8,12,16,20"))]
    dw = sec.getfloat("dw_scaled_min", 3.3)
    simulate = sec.getboolean("simulate", True)
    outputs = []
    summary = {}
    sim = (lambda L, tau, dwm: simulated_loss(L, tau, dwm, pulse=pulse, steps=steps)) \
        if simulate else None
    for alpha, tau0 in zip(alphas, tau0s):
        rows = scaling_study(alpha, tau0, lengths, pulse, dw, simulate=sim)
        name = f"scaling_alpha{alpha:g}.csv"
        fileio.export_scaling_csv(out / name, rows)
        outputs.append(name)
        losses = [r["simulated_loss"] for r in rows]
        summary[f"alpha_{alpha:g}"] = {
            "tau0": tau0,
            "bound_exponent": fit_growth_exponent(lengths, [r["bound_constant"] for r in rows]),
            "simulated_losses": losses,
        }
    fileio.write_json(out / "summary.json", summary)
    return outputs + ["summary.json"]


def cmd_disorder(cp, out: Path, args) -> list[str]:
    seed, workers, steps, _ = _run_meta(cp, args)
    spec = fileio.spec_from_config(cp)
    pulse = _pulse_from_config(cp)
    sec = cp["disorder"]
    p_values = fileio.parse_values(sec.get("p_values", "0.02,0.05,0.1"))
    classes = [c.strip() for c in sec.get("classes", "ph_symmetric,ph_breaking").split(",")]
    count = sec.getint("count", 200)
    dw_min = sec.getfloat("dw_min")
    delta_scale = sec.getfloat("delta_scale", 1.0)
    window = fileio.parse_values(sec.get("window", "0.5,2.0"))
    tau0_raw = sec.get("tau0", "auto").strip()
    if tau0_raw == "auto":
        spec_clean = spec.with_couplings(w=0.0)
        pts = outermost_branch(
            lambda dw, tau: ProtocolSchedule(spec_clean, pulse, tau, dw_min=float(dw)),
            [dw_min], 5.0, 40.0 * spec.length, n_tau=60, threshold=0.8, steps=steps)
        if not pts:
            raise IntegrationError("auto tau0: no high-fidelity branch found")
        tau0 = pts[0].tau
        clean_fidelity = pts[0].fidelity
    else:
        tau0 = float(tau0_raw)
        rep = evolve(ProtocolSchedule(spec, pulse, tau0, dw_min=dw_min), steps=steps)
        clean_fidelity = rep.fidelity

    summary_rows = []
    detail_rows = []
    for p in p_values:
        for klass in classes:
            cfg = DisorderConfig(p=float(p), klass=klass, seed=seed, count=count,
                                 delta_scale=delta_scale)
            res = disorder_transfer_study(spec, pulse, dw_min, cfg, tau0,
                                          window=(window[0], window[1]),
                                          steps=steps, workers=workers)
            summary_rows.append([p, klass, res.mean_fidelity, res.std_fidelity,
                                 res.mean_edge_weight, res.std_edge_weight, count,
                                 res.total_resamples])
            for row in res.rows:
                detail_rows.append([p, klass, row["index"], row["tau"], row["fidelity"],
                                    row["phase"], row["edge_weight"], row["resamples"]])
    fileio.write_csv(out / "disorder.csv",
                     ["p", "class", "mean_fidelity", "std_fidelity", "mean_edge_weight",
                      "std_edge_weight", "count", "resamples"], summary_rows)
    fileio.write_csv(out / "realizations.csv",
                     ["p", "class", "index", "tau", "fidelity", "phase", "edge_weight",
                      "resamples"], detail_rows)
    fileio.write_json(out / "summary.json", {
        "tau0": tau0,
        "clean_fidelity": clean_fidelity,
        "count": count,
        "seed": seed,
        "delta_scale": delta_scale,
    })
    return ["disorder.csv", "realizations.csv", "summary.json"]


def cmd_gate(cp, out: Path, args) -> list[str]:
    seed, workers, steps, frames = _run_meta(cp, args)
    sec = cp["gate"]
    gate = sec.get("gate", "cp").strip()
    length = sec.getint("length", 10)
    dw_min = sec.getfloat("dw_min", 0.2)
    pulse = _pulse_from_config(cp)
    tau_raw = sec.get("tau", "auto").strip()
    if tau_raw == "auto":
        window = fileio.parse_values(sec.get("tau_window", "50,400"))
        spec = NetworkSpec(kind="ssh", length=length, w=0.0, t=1.0)
        pts = outermost_branch(
            lambda dw, tau: ProtocolSchedule(spec, pulse, tau, dw_min=float(dw)),
            [dw_min], window[0], window[1], n_tau=50, threshold=0.9,
            steps=sec.getint("search_steps", 4000))
        if not pts:
            raise IntegrationError("gate tau search found no high-fidelity branch")
        tau = pts[0].tau
    else:
        tau = float(tau_raw)
    engine = GateEngine(
        length,
        transfer_dw_min=dw_min,
        transfer_tau=tau,
        transfer_steps=sec.getint("transfer_steps", 0) or None,
        pulse_steps=sec.getint("pulse_steps", 1200),
        pulse=pulse,
    )
    outputs = []
    if gate == "cp":
        report = cp_gate(engine, n_frames=frames)
        if report.timeseries is not None:
            fileio.write_csv(out / "gate_timeseries.csv", report.timeseries_columns,
                             report.timeseries)
            outputs.append("gate_timeseries.csv")
    elif gate == "swap":
        report = swap_gate(engine, seed=seed)
    else:
        raise SpecificationError(f"unknown gate {gate!r}")
    fileio.export_gate_report(out / "gate_report.json", report)
    outputs.append("gate_report.json")
    return outputs


def cmd_lattice2d(cp, out: Path, args) -> list[str]:
    seed, workers, steps, _ = _run_meta(cp, args)
    sec = cp["lattice"]
    geometry = sec.get("geometry", BOUNDARY).strip()
    rows_n = sec.getint("rows", 2)
    cols_n = sec.getint("cols", 3)
    pulse = _pulse_from_config(cp)
    stubs = None
    if "stubs" in sec:
        stubs = []
        for item in sec.get("stubs").split(";"):
            name, r, c, sub = [x.strip() for x in item.split(":")]
            stubs.append((name, int(r), int(c), sub))
    lat = build_honeycomb(rows_n, cols_n, geometry,
                          stub_cells=sec.getint("stub_cells", 3), stubs=stubs)
    fileio.write_lattice(out / "lattice.edges", lat)
    outputs = ["lattice.edges"]
    mode = sec.get("mode", "obstruction").strip()
    if mode == "obstruction":
        pair_a, pair_b = sec.get("pair_a"), sec.get("pair_b")
        taus = fileio.parse_values(sec.get("tau_values", "40:800:20"))
        dws = fileio.parse_values(sec.get("dw_values", "0.3,0.45,0.6"))
        rep = verify_obstruction(lat, pair_a, pair_b, pulse, taus, dws, steps=steps)
        payload = {
            "pair": [pair_a, pair_b],
            "parity_verdict": rep.parity_verdict,
            "max_fidelity": rep.max_fidelity,
            "best": rep.best,
            "scanned": rep.scanned,
            "rest_zero_splitting": rep.rest_zero_splitting,
            "notes": rep.notes,
        }
        if sec.getfloat("ablation_amplitude", 0.0) > 0:
            ablated = add_parity_breaking_edge(lat, pair_a, pair_b,
                                               sec.getfloat("ablation_amplitude"))
            rep2 = verify_obstruction(ablated, pair_a, pair_b, pulse, taus, dws, steps=steps)
            payload["ablation"] = {
                "amplitude": sec.getfloat("ablation_amplitude"),
                "max_fidelity": rep2.max_fidelity,
                "best": rep2.best,
            }
        fileio.write_json(out / "obstruction.json", payload)
        outputs.append("obstruction.json")
    elif mode == "path_transfer":
        pair_a, pair_b = sec.get("pair_a"), sec.get("pair_b")
        verdict = check_path_parity(lat, pair_a, pair_b)
        if verdict != "feasible":
            raise SpecificationError(
                f"terminals {pair_a},{pair_b} carry equal parity: path activation refused")
        path = find_path(lat, pair_a, pair_b)
        sched = activate_path(lat, path, pulse, sec.getfloat("tau"),
                              dw_min=sec.getfloat("dw_min"),
                              stray=sec.getfloat("stray", 0.0))
        report = evolve(sched, steps=steps, n_frames=int(cp["run"].get("frames", 200))
                        if cp.has_section("run") else 200)
        fileio.export_timeseries_csv(out / "timeseries.csv", report.timeseries, sched.labels)
        fileio.write_json(out / "summary.json", {
            "fidelity": report.fidelity,
            "phase": report.phase,
            "edge_weight": report.edge_weight,
            "path": path,
        })
        outputs += ["timeseries.csv", "summary.json"]
    else:
        raise SpecificationError(f"unknown lattice mode {mode!r}")
    return outputs


_COMMANDS = {
    "transfer": cmd_transfer,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "bound": cmd_bound,
    "disorder": cmd_disorder,
    "gate": cmd_gate,
    "lattice2d": cmd_lattice2d,
    "spectrum": cmd_spectrum,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="topolink",
        description="Batch simulator for topological bosonic network protocols")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="INI configuration file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--steps", type=int, default=None)
    args = parser.parse_args(argv)

    t0 = time.monotonic()
    try:
        cp = fileio.load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = _COMMANDS[args.command](cp, out, args)
        seed = args.seed if args.seed is not None else int(
            cp["run"].get("seed", 0) if cp.has_section("run") else 0)
        _manifest(out, args.command, cp, seed, outputs, t0)
    except SpecificationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, RootNotFoundError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
