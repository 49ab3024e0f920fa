"""Command-line entry point: run scenarios, sweeps and the self-test suite.

Scenario files are plain-text key = value documents mirroring the scenario
fields; one `flow = <variant-code> [key=val ...]` line per flow. Flags given
on the command line override file values. Exit codes: 0 success, 1 invariant
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

from .harness import (
    ConfigError,
    FlowConfig,
    ScenarioConfig,
    run_scenario,
    summary_row_for_run,
    sweep,
    write_summary,
    write_timeseries,
)
from .prr import PrrMode
from .queue import AqmConfig, DelayMetric, RampShape, StepShape
from .units import parse_duration, parse_rate

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2

_PRR_NAMES = {
    "rfc6937": PrrMode.RFC6937,
    "rfc": PrrMode.RFC6937,
    "bugged": PrrMode.LINUX_BUGGED,
    "linux_bugged": PrrMode.LINUX_BUGGED,
    "patched": PrrMode.PATCHED,
    "off": PrrMode.OFF,
}


def _parse_flow(value: str) -> FlowConfig:
    parts = value.split()
    if not parts:
        raise ConfigError("empty flow definition")
    code = parts[0]
    start = 0
    prr = None
    tso = None
    cwnd0 = 10
    for token in parts[1:]:
        if "=" not in token:
            raise ConfigError(f"flow option {token!r} is not key=value")
        key, _, val = token.partition("=")
        if key == "start":
            start = parse_duration(val)
        elif key == "prr":
            if val.lower() not in _PRR_NAMES:
                raise ConfigError(f"unknown prr mode {val!r}")
            prr = _PRR_NAMES[val.lower()]
        elif key == "tso":
            tso = val.lower() in ("1", "on", "true", "yes")
        elif key == "cwnd0":
            cwnd0 = -1 if val.lower() == "auto" else int(val)
        else:
            raise ConfigError(f"unknown flow option {key!r}")
    return FlowConfig(
        variant_code=code,
        start_ns=start,
        prr_override=prr,
        tso_override=tso,
        initial_cwnd=cwnd0,
    )


def read_scenario_file(path: Path, overrides: dict | None = None) -> ScenarioConfig:
    """Parse a scenario document into a ScenarioConfig."""
    values: dict[str, str] = {}
    flows: list[FlowConfig] = []
    for raw_line in path.read_text().splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: bad line {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "flow":
            flows.append(_parse_flow(value))
        else:
            values[key] = value
    if overrides:
        values.update({k: str(v) for k, v in overrides.items()})
    return build_scenario(values, flows, name=path.stem)


def build_scenario(values: dict, flows: list[FlowConfig], name: str = "") -> ScenarioConfig:
    try:
        metric = DelayMetric(values.get("aqm_metric", "sojourn").lower())
    except ValueError:
        raise ConfigError(f"unknown aqm_metric {values.get('aqm_metric')!r}")
    shape_kind = values.get("aqm_shape", "step").lower()
    if shape_kind == "step":
        shape = StepShape(parse_duration(values.get("aqm_threshold", "2ms")))
    elif shape_kind == "ramp":
        shape = RampShape(
            parse_duration(values.get("aqm_min", "2ms")),
            parse_duration(values.get("aqm_max", "4ms")),
        )
    else:
        raise ConfigError(f"unknown aqm_shape {shape_kind!r}")
    aqm = AqmConfig(metric, shape, int(values.get("drop_cap_pkts", 10_000)))
    cfg = ScenarioConfig(
        capacity_bps=parse_rate(values.get("capacity", "200mbit")),
        base_rtt_ns=parse_duration(values.get("rtt", "50ms")),
        aqm=aqm,
        flows=tuple(flows),
        warmup_ns=parse_duration(values.get("warmup", "20s")),
        measure_ns=parse_duration(values.get("measure", "40s")),
        sample_window_rtts=int(values.get("sample_window_rtts", 2)),
        seed=int(values.get("seed", 1)),
        nic_rate_multiplier=float(values.get("nic_rate_multiplier", 10.0)),
        seg_size=int(values.get("seg_size", 1500)),
        payload_size=int(values.get("payload_size", 1448)),
        start_jitter_ns=parse_duration(values.get("start_jitter", 0)),
        emit_jitter_ns=parse_duration(values.get("emit_jitter", 0)),
        alpha_init_fraction=float(values.get("alpha_init", 0.0)),
        name=name,
    )
    cfg.validate()
    return cfg


def _axis_values(axis: str, text: str) -> list:
    parts = [p for p in text.split(",") if p.strip()]
    if axis == "rtt":
        return [parse_duration(p) for p in parts]
    return [parse_rate(p) for p in parts]


def _cmd_run(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        print(f"scenario file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for item in args.set or []:
        key, _, val = item.partition("=")
        overrides[key.strip().lower()] = val.strip()
    cfg = read_scenario_file(path, overrides)
    result = run_scenario(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_timeseries(result, out_dir / "timeseries.csv")
    write_summary([summary_row_for_run(result)], out_dir / "summary.csv")
    s = result.summary
    print(
        f"{cfg.name or path.stem}: utilization={s.utilization:.4f} "
        f"jain={s.jain:.4f} mean_queue={s.mean_queue_us:.1f}us "
        f"p99_queue={s.p99_queue_us:.1f}us drops={s.drops}"
    )
    if not result.conservation_ok:
        print("packet conservation check failed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_sweep(args) -> int:
    path = Path(args.scenario)
    if not path.is_file():
        print(f"scenario file not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for item in args.set or []:
        key, _, val = item.partition("=")
        overrides[key.strip().lower()] = val.strip()
    template = read_scenario_file(path, overrides)
    values = _axis_values(args.axis, args.values)
    rows, means = sweep(template, args.axis, values, reps=args.reps, parallel=args.parallel)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_summary(rows + means, out_dir / "summary.csv")
    failures = [r for r in rows if r.error]
    for r in failures:
        print(f"axis={r.axis_value} seed={r.seed} failed: {r.error}", file=sys.stderr)
    print(f"sweep complete: {len(rows)} rows, {len(means)} means -> {out_dir / 'summary.csv'}")
    return EXIT_INVARIANT if failures else EXIT_OK


def _cmd_selftest(args) -> int:
    scenario_dir = Path(args.scenario_dir)
    files = sorted(scenario_dir.glob("*.cfg"))
    if not args.all:
        # full-scale configs are nightly material, not part of the desk gate
        files = [f for f in files if "fullscale" not in f.name]
    if not files:
        print(f"no scenario files in {scenario_dir}", file=sys.stderr)
        return EXIT_USAGE
    failures = 0
    started = time.time()
    for path in files:
        cfg = read_scenario_file(path)
        if args.quick:
            from dataclasses import replace

            cfg = replace(
                cfg,
                warmup_ns=min(cfg.warmup_ns, 2_000_000_000),
                measure_ns=min(cfg.measure_ns, 4_000_000_000),
            )
        t0 = time.time()
        result = run_scenario(cfg)
        ok = result.conservation_ok and result.summary.utilization <= 1.0 + 1e-9
        jain = result.summary.jain
        if not math.isnan(jain):
            ok = ok and 0.0 <= jain <= 1.0 + 1e-9
        status = "ok" if ok else "FAIL"
        if not ok:
            failures += 1
        print(
            f"{status:4s} {path.name:36s} util={result.summary.utilization:6.3f} "
            f"({time.time() - t0:.1f}s)"
        )
    print(f"selftest: {len(files)} scenarios in {time.time() - started:.1f}s, {failures} failures")
    return EXIT_INVARIANT if failures else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ecnsim", description="single-bottleneck ECN congestion-control simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--out-dir", default="out")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--set", action="append", metavar="KEY=VAL", help="override a file value")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep capacity or rtt over a scenario template")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--axis", choices=("capacity", "rtt"), required=True)
    p_sweep.add_argument("--values", required=True, help="comma-separated, e.g. 10ms,20ms,50ms")
    p_sweep.add_argument("--reps", type=int, default=5)
    p_sweep.add_argument("--parallel", type=int, default=1)
    p_sweep.add_argument("--out-dir", default="out")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--set", action="append", metavar="KEY=VAL", help="override a file value")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_self = sub.add_parser("selftest", help="run the committed scenarios and invariant checks")
    p_self.add_argument("--scenario-dir", default="scenarios")
    p_self.add_argument("--quick", action="store_true", help="shorten runs to a smoke pass")
    p_self.add_argument("--all", action="store_true", help="include full-scale nightly configs")
    p_self.set_defaults(func=_cmd_selftest)

    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
