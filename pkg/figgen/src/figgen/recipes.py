"""The eight figure recipes over the frozen output contracts.

Every renderer draws on a fixed canvas with fixed colormap bounds (the
cyclic phase map is anchored so the +-pi/2 ticks are visually checkable)
and writes PNG through the Agg backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DPI = 150
PHASE_TICKS = [-np.pi, -np.pi / 2, 0.0, np.pi / 2, np.pi]
PHASE_TICK_LABELS = [r"$-\pi$", r"$-\pi/2$", "0", r"$+\pi/2$", r"$+\pi$"]


class SchemaError(RuntimeError):
    """An input file is missing, empty, or lacks a required column."""


@dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    input_glob: str
    columns: tuple[str, ...]
    description: str


def read_table(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    if not path.exists():
        raise SchemaError(f"input file missing: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise SchemaError(f"empty input file: {path}")
    header = lines[0].split(",")
    for col in required:
        if col not in header:
            raise SchemaError(f"{path} lacks required column {col!r}")
    if len(lines) < 2:
        raise SchemaError(f"{path} has a header but no data rows")
    raw = [ln.split(",") for ln in lines[1:]]
    table = {}
    for j, name in enumerate(header):
        col = []
        for row in raw:
            cell = row[j] if j < len(row) else ""
            try:
                col.append(float(cell))
            except ValueError:
                col.append(np.nan)
        table[name] = np.asarray(col)
    table["_header"] = header
    return table


def _new_axes(width=6.0, height=4.0):
    fig, ax = plt.subplots(figsize=(width, height), dpi=DPI)
    return fig, ax


def _save(fig, out_path: Path):
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)


# ---------------------------------------------------------------------------
# renderers
# ---------------------------------------------------------------------------


def render_amplitude_heatmap(path: Path, out_path: Path):
    table = read_table(path, ("t",))
    header = [h for h in table["_header"] if h.startswith("p_")]
    if not header:
        raise SchemaError(f"{path} lacks amplitude columns p_*")
    t = table["t"]
    grid = np.column_stack([table[h] for h in header])
    fig, ax = _new_axes()
    im = ax.imshow(grid.T, aspect="auto", origin="lower", cmap="viridis",
                   vmin=0.0, vmax=1.0,
                   extent=(float(t[0]), float(t[-1]), 0.5, len(header) + 0.5))
    ax.set_xlabel("time")
    ax.set_ylabel("mode index")
    fig.colorbar(im, ax=ax, label="population")
    _save(fig, out_path)


def render_sweep_tiles(path: Path, out_path: Path):
    table = read_table(path, ("tau", "param", "fidelity", "phase", "edge_weight"))
    tau, param = table["tau"], table["param"]
    good = ~np.isnan(table["fidelity"])
    if not good.any():
        raise SchemaError(f"{path} contains no valid sweep cells")
    fig, ax = _new_axes(7.0, 4.5)
    ax.scatter(param[good], tau[good], s=90 * table["edge_weight"][good],
               marker="s", color="0.8", linewidths=0, zorder=1)
    sc = ax.scatter(param[good], tau[good], s=60 * table["fidelity"][good],
                    marker="s", c=table["phase"][good], cmap="twilight",
                    vmin=-np.pi, vmax=np.pi, linewidths=0, zorder=2)
    cb = fig.colorbar(sc, ax=ax, label="phase")
    cb.set_ticks(PHASE_TICKS)
    cb.set_ticklabels(PHASE_TICK_LABELS)
    ax.set_xlabel("protocol amplitude parameter")
    ax.set_ylabel("protocol timescale")
    _save(fig, out_path)


def render_rescaled_scales(path: Path, out_path: Path):
    table = read_table(path, ("dw_scaled", "edge_scale", "bulk_scale"))
    dw = table["dw_scaled"]
    fig, ax = _new_axes()
    ax.semilogy(dw, table["edge_scale"], color="#d4a017", label="edge splitting x L")
    ax.semilogy(dw, table["bulk_scale"], color="black", label="bulk gap x L")
    summary_path = path.parent / "summary.json"
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
        if "ratio_target" in summary:
            ratio = summary["ratio_target"]
            ax.semilogy(dw, ratio * table["edge_scale"], color="#d4a017",
                        linestyle="--", label=f"{ratio:g} x edge")
            planned = summary["dw_planned"]
            level = np.interp(planned, dw, table["bulk_scale"])
            ax.plot([planned], [level], marker="o", markersize=10,
                    markerfacecolor="none", markeredgecolor="red", zorder=3)
    ax.set_xlabel("rescaled distance from criticality")
    ax.set_ylabel("rescaled energy")
    ax.legend()
    _save(fig, out_path)


def render_amplitude_scan(path: Path, out_path: Path):
    table = read_table(path, ("param", "fidelity", "edge_weight"))
    order = np.argsort(table["param"])
    fig, ax = _new_axes()
    ax.plot(table["param"][order], table["fidelity"][order], color="red",
            label="transfer fidelity")
    ax.plot(table["param"][order], table["edge_weight"][order], color="black",
            linestyle="--", label="edge weight")
    ax.set_xlabel("distance from criticality")
    ax.set_ylabel("figure of merit")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    _save(fig, out_path)


def render_loss_scaling(paths: list[Path], out_path: Path):
    fig, ax = _new_axes()
    colors = ["#1f77b4", "#2ca02c", "#d62728", "#9467bd"]
    for k, path in enumerate(sorted(paths)):
        table = read_table(path, ("length", "tau", "bound_constant",
                                  "loss_bound", "simulated_loss"))
        label = path.stem.replace("scaling_", "")
        color = colors[k % len(colors)]
        ax.loglog(table["length"], table["loss_bound"], color=color,
                  linestyle="--", label=f"{label} bound")
        ax.loglog(table["length"], table["simulated_loss"], color=color,
                  marker="o", linestyle="-", label=f"{label} simulated")
    ax.set_xlabel("chain length")
    ax.set_ylabel("bulk loss")
    ax.legend(fontsize=8)
    _save(fig, out_path)


def render_disorder_summary(path: Path, out_path: Path):
    table = read_table(path, ("p", "mean_fidelity", "std_fidelity",
                              "mean_edge_weight", "std_edge_weight"))
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [ln.rstrip("\n").split(",") for ln in fh if ln.strip()]
    cls_idx = header.index("class")
    classes = sorted({r[cls_idx] for r in rows})
    fig, ax = _new_axes()
    palette = {"ph_symmetric": "red", "ph_breaking": "black"}
    for klass in classes:
        mask = np.array([r[cls_idx] == klass for r in rows])
        p = table["p"][mask]
        ax.errorbar(p, table["mean_fidelity"][mask], yerr=table["std_fidelity"][mask],
                    marker="o", linestyle="-", capsize=3,
                    color=palette.get(klass, None), label=f"{klass} fidelity")
        ax.errorbar(p, table["mean_edge_weight"][mask],
                    yerr=table["std_edge_weight"][mask], marker="o",
                    markerfacecolor="none", linestyle="--", capsize=3,
                    color=palette.get(klass, None), label=f"{klass} edge weight")
    ax.set_xlabel("disorder strength")
    ax.set_ylabel("ensemble mean")
    ax.legend(fontsize=8)
    _save(fig, out_path)


def render_gate_timeseries(path: Path, out_path: Path):
    table = read_table(path, ("t",))
    header = [h for h in table["_header"] if h not in ("t",) and not h.startswith("phase")]
    if not header:
        raise SchemaError(f"{path} has no population columns")
    fig, ax = _new_axes(7.0, 4.0)
    styles = {"qubit_T": ("black", "-"), "edge_T": ("red", "-"),
              "edge_C": ("blue", "-"), "absorbed_C": ("black", "--")}
    for name in header:
        color, style = styles.get(name, (None, "-"))
        ax.plot(table["t"], table[name], color=color, linestyle=style, label=name)
    phase_cols = [h for h in table["_header"] if h.startswith("phase")]
    if phase_cols:
        twin = ax.twinx()
        twin.plot(table["t"], table[phase_cols[0]], color="0.6", linewidth=0.8)
        twin.set_ylim(-np.pi, np.pi)
        twin.set_yticks(PHASE_TICKS)
        twin.set_yticklabels(PHASE_TICK_LABELS)
        twin.set_ylabel("path phase", color="0.4")
    ax.set_xlabel("time")
    ax.set_ylabel("population")
    ax.legend(fontsize=8, loc="center left")
    _save(fig, out_path)


# ---------------------------------------------------------------------------
# recipe table
# ---------------------------------------------------------------------------

RECIPES: dict[str, FigureRecipe] = {
    "fig3a": FigureRecipe("fig3a", "transfer_ssh/timeseries.csv",
                          ("t",), "excitation heatmap, dimerized chain"),
    "fig4a": FigureRecipe("fig4a", "sweep_ssh/sweep.csv",
                          ("tau", "param", "fidelity", "phase", "edge_weight"),
                          "sweep tiles, dimerized chain"),
    "fig4c": FigureRecipe("fig4c", "sweep_barrier/sweep.csv",
                          ("tau", "param", "fidelity", "phase", "edge_weight"),
                          "sweep tiles, tunnelling barrier"),
    "fig5b": FigureRecipe("fig5b", "spectrum_rescaled/rescaled_scan.csv",
                          ("dw_scaled", "edge_scale", "bulk_scale"),
                          "rescaled energy scales with ratio intersection"),
    "fig5c": FigureRecipe("fig5c", "scan_optimum/sweep.csv",
                          ("param", "fidelity", "edge_weight"),
                          "fidelity/edge weight vs distance from criticality"),
    "fig5f": FigureRecipe("fig5f", "scaling/scaling_alpha*.csv",
                          ("length", "tau", "bound_constant", "loss_bound",
                           "simulated_loss"),
                          "bulk-loss scaling against the bounds"),
    "fig6d": FigureRecipe("fig6d", "disorder/disorder.csv",
                          ("p", "mean_fidelity", "std_fidelity"),
                          "disorder ensemble means with spreads"),
    "fig7d": FigureRecipe("fig7d", "gate_cp/gate_timeseries.csv",
                          ("t",), "gate protocol populations and path phase"),
}

_RENDERERS = {
    "fig3a": render_amplitude_heatmap,
    "fig4a": render_sweep_tiles,
    "fig4c": render_sweep_tiles,
    "fig5b": render_rescaled_scales,
    "fig5c": render_amplitude_scan,
    "fig5f": render_loss_scaling,
    "fig6d": render_disorder_summary,
    "fig7d": render_gate_timeseries,
}


def render(figure_id: str, in_dir: str | Path, out_dir: str | Path) -> Path:
    """Render one recipe from an output directory; returns the image path."""
    if figure_id not in RECIPES:
        raise SchemaError(f"unknown recipe {figure_id!r}; have {sorted(RECIPES)}")
    recipe = RECIPES[figure_id]
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{figure_id}.png"
    renderer = _RENDERERS[figure_id]
    if "*" in recipe.input_glob:
        matches = sorted(in_dir.glob(recipe.input_glob))
        if not matches:
            raise SchemaError(f"no inputs match {recipe.input_glob} under {in_dir}")
        renderer(matches, out_path)
    else:
        renderer(in_dir / recipe.input_glob, out_path)
    return out_path
