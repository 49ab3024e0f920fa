"""Figure-rendering entry point over simulator CSV outputs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .panels import SWEEP_PANELS, TIMESERIES_PANELS, PanelSpec, PlotDataError, plot_sweep, plot_timeseries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ecnsim-plots", description="render simulator CSVs")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ts = sub.add_parser("timeseries", help="stacked per-run time-series panels")
    p_ts.add_argument("--input", action="append", required=True, help="timeseries.csv, one per run")
    p_ts.add_argument("--out", required=True, help="output image (.svg or .png; both are written)")
    p_ts.add_argument(
        "--panels", default="cwnd,throughput,alpha", help=f"subset of {','.join(TIMESERIES_PANELS)}"
    )
    p_ts.add_argument("--label", action="append", default=[], help="series label per input")
    p_ts.set_defaults(kind="timeseries")

    p_sw = sub.add_parser("sweep", help="sweep panels: points per repetition, line through means")
    p_sw.add_argument("--input", action="append", required=True, help="summary.csv, one per series")
    p_sw.add_argument("--out", required=True)
    p_sw.add_argument(
        "--panels", default="utilization,queue,jain", help=f"subset of {','.join(SWEEP_PANELS)}"
    )
    p_sw.add_argument("--label", action="append", default=[])
    p_sw.add_argument("--axis-label", default="axis")
    p_sw.set_defaults(kind="sweep")

    args = parser.parse_args(argv)
    spec = PanelSpec(
        inputs=tuple(args.input),
        panels=tuple(p.strip() for p in args.panels.split(",") if p.strip()),
        output=Path(args.out),
        labels=tuple(args.label),
        axis_label=getattr(args, "axis_label", "axis"),
    )
    try:
        out = plot_timeseries(spec) if args.kind == "timeseries" else plot_sweep(spec)
    except PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
