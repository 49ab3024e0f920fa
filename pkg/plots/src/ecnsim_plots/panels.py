"""Panel construction from simulator CSVs.

Two figure families are supported:

* time-series figures: one stacked panel per input run (grouped by variant),
  with one trace per flow, for any of the cwnd / throughput / alpha / queue
  columns;
* sweep figures: per-repetition points with a line through the per-value
  means, one panel per metric (jain / utilization / queue / ratio), one
  series per input file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

TIMESERIES_PANELS = ("cwnd", "throughput", "alpha", "queue")
SWEEP_PANELS = ("jain", "utilization", "queue", "ratio")

_TS_COLUMN = {
    "cwnd": "cwnd",
    "throughput": "throughput_bps",
    "alpha": "alpha",
    "queue": "queue_delay_us",
}
_TS_LABEL = {
    "cwnd": "cwnd [segments]",
    "throughput": "throughput [Mb/s]",
    "alpha": "alpha",
    "queue": "queue delay [ms]",
}
_SW_COLUMN = {
    "jain": "jain",
    "utilization": "utilization",
    "queue": "mean_queue_us",
    "ratio": "geo_ratio",
}
_SW_LABEL = {
    "jain": "Jain's fairness index",
    "utilization": "utilization",
    "queue": "mean queue delay [ms]",
    "ratio": "rate ratio (flow 1 / flow 2)",
}


class PlotDataError(ValueError):
    """Input CSV is missing, empty, or lacks a required column."""


@dataclass(frozen=True)
class PanelSpec:
    inputs: tuple  # CSV paths; one run (timeseries) or one series (sweep) each
    panels: tuple  # panel names, drawn top to bottom
    output: Path
    group: str = "variant"  # timeseries grouping: one panel row per input run
    labels: tuple = ()  # optional series labels, defaults to file stems
    axis_label: str = "axis"  # sweep x-axis label

    def label_for(self, idx: int) -> str:
        if idx < len(self.labels):
            return self.labels[idx]
        return Path(self.inputs[idx]).stem


def _read_rows(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise PlotDataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotDataError(f"{path}: empty CSV, nothing to plot")
    return rows


def _column(rows, path, name, line_offset=2):
    if name not in rows[0]:
        raise PlotDataError(f"{path}:1: missing column {name!r}")
    out = []
    for i, row in enumerate(rows):
        text = row[name]
        if text == "":
            out.append(math.nan)
            continue
        try:
            out.append(float(text))
        except ValueError:
            raise PlotDataError(f"{path}:{i + line_offset}: bad value {text!r} in {name!r}")
    return out


def load_timeseries(path) -> dict:
    """Rows grouped per flow: {flow_id: {column: [values...]}}."""
    rows = _read_rows(path)
    for col in ("time_ns", "flow", "cwnd", "alpha", "throughput_bps", "marks", "queue_delay_us"):
        if col not in rows[0]:
            raise PlotDataError(f"{path}:1: missing column {col!r}")
    flows: dict = {}
    for row in rows:
        flow = int(row["flow"])
        bucket = flows.setdefault(
            flow, {"time_s": [], "cwnd": [], "alpha": [], "throughput_bps": [], "queue_delay_us": []}
        )
        bucket["time_s"].append(float(row["time_ns"]) / 1e9)
        bucket["cwnd"].append(float(row["cwnd"]))
        bucket["alpha"].append(float(row["alpha"]) if row["alpha"] else math.nan)
        bucket["throughput_bps"].append(float(row["throughput_bps"]))
        bucket["queue_delay_us"].append(float(row["queue_delay_us"]))
    return flows


def load_summary(path) -> tuple[list[dict], list[dict]]:
    """(repetition rows, mean rows) with numeric fields parsed."""
    rows = _read_rows(path)
    for col in ("axis_value", "seed", "jain", "geo_ratio", "utilization", "mean_queue_us"):
        if col not in rows[0]:
            raise PlotDataError(f"{path}:1: missing column {col!r}")
    reps, means = [], []
    for i, row in enumerate(rows):
        parsed = {"axis_value": float(row["axis_value"])}
        for key in ("jain", "geo_ratio", "utilization", "mean_queue_us", "p99_queue_us"):
            text = row.get(key, "")
            parsed[key] = float(text) if text else math.nan
        (means if row["seed"] == "mean" else reps).append(parsed)
    return reps, means


def plot_timeseries(spec: PanelSpec) -> Path:
    """Stacked panels: rows = input runs, columns = requested metrics."""
    for panel in spec.panels:
        if panel not in TIMESERIES_PANELS:
            raise PlotDataError(f"unknown time-series panel {panel!r}")
    runs = [(spec.label_for(i), load_timeseries(p)) for i, p in enumerate(spec.inputs)]
    n_rows = len(runs)
    n_cols = len(spec.panels)
    fig, axes = plt.subplots(
        n_rows, n_cols, figsize=(4.2 * n_cols, 2.0 * n_rows), squeeze=False, sharex=True
    )
    for r, (label, flows) in enumerate(runs):
        for c, panel in enumerate(spec.panels):
            ax = axes[r][c]
            for flow_id in sorted(flows):
                data = flows[flow_id]
                ys = data[_TS_COLUMN[panel] if panel != "queue" else "queue_delay_us"]
                if panel == "throughput":
                    ys = [y / 1e6 for y in ys]
                elif panel == "queue":
                    ys = [y / 1e3 for y in ys]
                ax.plot(data["time_s"], ys, linewidth=0.8, label=f"flow {flow_id}")
            if r == 0:
                ax.set_title(_TS_LABEL[panel], fontsize=9)
            if r == n_rows - 1:
                ax.set_xlabel("time [s]")
            if c == 0:
                ax.set_ylabel(label, fontsize=8)
            ax.grid(True, alpha=0.3)
        axes[r][-1].legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    return _save(fig, spec.output)


def plot_sweep(spec: PanelSpec) -> Path:
    """Per-repetition points plus a line through the means, per series."""
    for panel in spec.panels:
        if panel not in SWEEP_PANELS:
            raise PlotDataError(f"unknown sweep panel {panel!r}")
    series = [(spec.label_for(i), *load_summary(p)) for i, p in enumerate(spec.inputs)]
    n = len(spec.panels)
    fig, axes = plt.subplots(n, 1, figsize=(5.0, 2.2 * n), squeeze=False, sharex=True)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for p_idx, panel in enumerate(spec.panels):
        ax = axes[p_idx][0]
        col = _SW_COLUMN[panel]
        for s_idx, (label, reps, means) in enumerate(series):
            color = colors[s_idx % len(colors)]
            xs = [r["axis_value"] for r in reps]
            ys = [r[col] for r in reps]
            if panel == "queue":
                ys = [y / 1e3 for y in ys]
            ax.plot(xs, ys, ".", color=color, markersize=4, alpha=0.6)
            if means:
                mx = [m["axis_value"] for m in means]
                my = [m[col] / (1e3 if panel == "queue" else 1) for m in means]
                ax.plot(mx, my, "-o", color=color, markersize=3, linewidth=1.2, label=label)
            else:
                ax.plot([], [], "-", color=color, label=label)
        ax.set_ylabel(_SW_LABEL[panel], fontsize=8)
        if panel == "jain":
            ax.set_ylim(0.0, 1.02)
        elif panel == "ratio":
            ax.set_yscale("log")  # symmetric around 1 for inverted imbalances
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
    axes[-1][0].set_xlabel(spec.axis_label)
    fig.tight_layout()
    return _save(fig, spec.output)


def _save(fig, output) -> Path:
    output = Path(output)
    output.parent.mkdir(parents=True, exist_ok=True)
    targets = [output]
    # emit both vector and raster forms
    if output.suffix.lower() == ".svg":
        targets.append(output.with_suffix(".png"))
    elif output.suffix.lower() == ".png":
        targets.append(output.with_suffix(".svg"))
    for t in targets:
        fig.savefig(t, dpi=120)
    plt.close(fig)
    return output
