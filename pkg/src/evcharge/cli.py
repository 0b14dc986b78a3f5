"""Command-line front end: run scenarios, fit models, compare strategies.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All output files
are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from datetime import date, datetime, timedelta
from pathlib import Path

from .economic import PricingSchedule
from .predictor import (dump_models_json, fit_arrival_model, fit_slot_models,
                        initial_daily_count, ModelFitError)
from .sessions import (ChargingSession, SessionHistory, SlotClock, group_by_day,
                       parse_sessions_csv, parse_sessions_json)
from .simulator import Metrics, ScenarioConfig, run_day
from .synthetic import SyntheticProfile, generate_days

#: Day-ahead TOU default: cheap overnight/morning, midday peak, mild
#: afternoon shoulder, evening bump (currency/kWh).
DEFAULT_TOU_PRICES = (
    0.08, 0.08, 0.08, 0.08, 0.08, 0.08,
    0.10, 0.12, 0.12, 0.12, 0.16, 0.20,
    0.20, 0.20, 0.16, 0.13, 0.13, 0.13,
    0.16, 0.16, 0.16, 0.10, 0.09, 0.08,
)

DEFAULT_START_DATE = date(2021, 1, 4)  # a Monday


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _load_config_file(path: str) -> dict[str, str]:
    """Flat key = value config; '#' starts a comment."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


#: defaults for every option that a config file may also set
DEFAULTS = {
    "sessions": None, "prices": None, "days": None, "date_range": None,
    "ports": 54, "cycle_min": 10, "w": 0.0003, "m1": 1, "m2": 1, "seed": 0,
    "history_days": 15, "stated_bias_min": 0.0, "out": "out",
}

_CASTS = {"days": int, "ports": int, "cycle_min": int, "w": float, "m1": int,
          "m2": int, "seed": int, "history_days": int, "stated_bias_min": float}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evcharge",
        description="Workplace EV-charging simulation: predictive caps plus "
                    "priority scheduling under TOU prices.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file; flags override it")
        p.add_argument("--sessions", help="session CSV/JSON; omitted = synthetic fixture")
        p.add_argument("--prices", help="file with 24 comma-separated hourly prices")
        p.add_argument("--days", type=int, help="number of days to evaluate")
        p.add_argument("--date-range", help="inclusive ISO range, e.g. 2021-01-04:2021-01-08")
        p.add_argument("--ports", type=int)
        p.add_argument("--cycle-min", type=int)
        p.add_argument("--w", type=float)
        p.add_argument("--m1", type=int)
        p.add_argument("--m2", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--history-days", type=int,
                       help="synthetic warm-up days fitted before the evaluated range")
        p.add_argument("--stated-bias-min", type=float,
                       help="synthetic user-stated departure bias in minutes")
        p.add_argument("--out", help="output directory (default: out)")

    sim = sub.add_parser("simulate", help="run scenarios and write traces/metrics")
    add_common(sim)
    sim.add_argument("--scenario", action="append", choices=["S1", "S2", "S3", "S4"],
                     required=True)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="fit the stochastic models and dump them as JSON")
    add_common(fit)
    fit.set_defaults(func=cmd_fit)

    comp = sub.add_parser("compare", help="side-by-side cumulative cost and deficit")
    add_common(comp)
    comp.add_argument("--scenario", action="append", choices=["S1", "S2", "S3", "S4"],
                      required=True)
    comp.set_defaults(func=cmd_compare)
    return parser


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Resolve each option as: explicit flag > config file entry > default."""
    values: dict[str, str] = {}
    if args.config:
        try:
            values = _load_config_file(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
    for key in values:
        attr = key.replace("-", "_")
        if attr != "scenario" and attr not in DEFAULTS:
            parser.error(f"unknown config key {key!r}")
    if "scenario" in values and not getattr(args, "scenario", None):
        args.scenario = [v.strip() for v in values["scenario"].split(",") if v.strip()]
    for attr, default in DEFAULTS.items():
        if getattr(args, attr, None) is None:
            if attr in values or attr.replace("_", "-") in values:
                raw = values.get(attr, values.get(attr.replace("_", "-")))
                setattr(args, attr, _CASTS.get(attr, str)(raw))
            else:
                setattr(args, attr, default)


class _Inputs:
    """Resolved sessions, history and run configuration."""

    def __init__(self, days: dict[date, list[ChargingSession]],
                 history: SessionHistory, prices: PricingSchedule,
                 clock: SlotClock, warnings: list[str]):
        self.days = days
        self.history = history
        self.prices = prices
        self.clock = clock
        self.warnings = warnings


def _resolve_inputs(args: argparse.Namespace) -> _Inputs:
    clock = SlotClock(args.cycle_min)
    warnings: list[str] = []
    if args.prices:
        prices = PricingSchedule.from_file(args.prices)
    else:
        prices = PricingSchedule(DEFAULT_TOU_PRICES)

    if args.sessions:
        path = Path(args.sessions)
        if not path.exists():
            raise FileNotFoundError(f"session file not found: {path}")
        if path.suffix.lower() == ".json":
            sessions, issues = parse_sessions_json(path)
        else:
            sessions, issues = parse_sessions_csv(path)
        for issue in issues:
            warnings.append(f"{path.name}: {issue}")
        if any(s.truncated for s in sessions):
            warnings.append(f"{path.name}: sessions crossing midnight were "
                            "truncated at day end")
        all_days = group_by_day(sessions)
    else:
        n_eval = args.days or 1
        profile = SyntheticProfile(stated_bias_minutes=args.stated_bias_min)
        start = DEFAULT_START_DATE
        warm_start = start - timedelta(days=args.history_days)
        all_days = generate_days(warm_start, args.history_days + n_eval, args.seed,
                                 profile, clock)

    selected = dict(all_days)
    if args.date_range:
        lo_s, _, hi_s = args.date_range.partition(":")
        lo, hi = date.fromisoformat(lo_s), date.fromisoformat(hi_s or lo_s)
        selected = {d: s for d, s in selected.items() if lo <= d <= hi}
    if args.sessions:
        if args.days:
            selected = dict(list(selected.items())[:args.days])
    else:
        n_eval = args.days or 1
        selected = dict(list(selected.items())[-n_eval:])

    if not selected:
        raise ValueError("no days selected to evaluate")
    first = min(selected)
    history = SessionHistory()
    for d, sessions in all_days.items():
        if d < first:
            history.extend(sessions)
    return _Inputs(selected, history, prices, clock, warnings)


def _scenario_config(args: argparse.Namespace, scenario: str,
                     inputs: _Inputs) -> ScenarioConfig:
    return ScenarioConfig(scenario=scenario, clock=inputs.clock,
                          port_count=args.ports, prices=inputs.prices,
                          w=args.w, m1=args.m1, m2=args.m2)


def _run_days(args, inputs: _Inputs, scenarios: list[str]):
    """Per-day, per-scenario runs with the history rolling forward."""
    configs = {s: _scenario_config(args, s, inputs) for s in scenarios}
    traces: dict[str, list] = {s: [] for s in scenarios}
    metrics: dict[str, list[Metrics]] = {s: [] for s in scenarios}
    history = inputs.history
    for day in sorted(inputs.days):
        sessions = inputs.days[day]
        for s in scenarios:
            trace, m = run_day(sessions, configs[s], history)
            traces[s].append((day, trace))
            metrics[s].append(m)
        history.extend(sessions)
    return traces, metrics


def _totals(metrics: list[Metrics]) -> dict:
    out = Metrics()
    for m in metrics:
        for key, value in m.to_dict().items():
            setattr(out, key, getattr(out, key) + value)
    return out.to_dict()


def _write_outputs(outdir: Path, traces, metrics, days) -> None:
    outdir.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["date", "scenario", "slot", "cap_kw", "drawn_kw", "cum_kwh", "price"])
    for scenario, day_traces in traces.items():
        for day, trace in day_traces:
            hours = 24.0 / len(trace.caps_kw)
            for k in range(len(trace.caps_kw)):
                w.writerow([day.isoformat(), scenario, k,
                            f"{trace.caps_kw[k]:.4f}",
                            f"{trace.grid_kwh[k] / hours:.4f}",
                            f"{trace.cum_delivered_kwh[k + 1]:.6f}",
                            f"{trace.prices_slot[k]:.4f}"])
    atomic_write_text(outdir / "trace.csv", buf.getvalue())

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["date", "scenario", "session_id", "requested_kwh", "delivered_kwh",
                "fully_served", "served_90pct", "rejected", "truncated"])
    for scenario, day_traces in traces.items():
        for day, trace in day_traces:
            for o in trace.outcomes:
                w.writerow([day.isoformat(), scenario, o.session_id,
                            f"{o.requested_kwh:.6f}", f"{o.delivered_kwh:.6f}",
                            int(o.fully_served), int(o.served_90pct),
                            int(o.rejected), int(o.truncated)])
    atomic_write_text(outdir / "sessions_out.csv", buf.getvalue())

    summary = {
        scenario: {
            "per_day": [{"date": d.isoformat(), **m.to_dict()}
                        for d, m in zip(sorted(days), ms)],
            "totals": _totals(ms),
        }
        for scenario, ms in metrics.items()
    }
    atomic_write_text(outdir / "metrics.json", json.dumps(summary, indent=2, sort_keys=True))

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["date", "scenario", "cumulative_cost", "cumulative_delta_emin"])
    for scenario, ms in metrics.items():
        cost = demin = 0.0
        for d, m in zip(sorted(days), ms):
            cost += m.total_cost
            demin += m.delta_e_min
            w.writerow([d.isoformat(), scenario, f"{cost:.6f}", f"{demin:.6f}"])
    atomic_write_text(outdir / "cumulative.csv", buf.getvalue())


def _print_summary(metrics: dict[str, list[Metrics]]) -> None:
    header = f"{'scenario':<9} {'cost':>10} {'dE_min':>10} {'requested':>10} " \
             f"{'delivered':>10} {'full':>5} {'90pct':>5} {'evs':>5}"
    print(header)
    for scenario, ms in metrics.items():
        t = _totals(ms)
        print(f"{scenario:<9} {t['total_cost']:>10.2f} {t['delta_e_min']:>10.1f} "
              f"{t['requested_kwh']:>10.1f} {t['delivered_kwh']:>10.1f} "
              f"{t['fully_served']:>5d} {t['served_90pct']:>5d} {t['total_arrivals']:>5d}")


def cmd_simulate(args: argparse.Namespace) -> int:
    inputs = _resolve_inputs(args)
    for note in inputs.warnings:
        print(f"warning: {note}", file=sys.stderr)
    traces, metrics = _run_days(args, inputs, args.scenario)
    _write_outputs(Path(args.out), traces, metrics, inputs.days)
    _print_summary(metrics)
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    inputs = _resolve_inputs(args)
    history = inputs.history
    for sessions in inputs.days.values():
        history.extend(sessions)
    if not history.sessions:
        raise ModelFitError("no sessions available to fit")
    arrival_models = {}
    for weekend in (False, True):
        try:
            model = fit_arrival_model(history, weekend, inputs.clock)
        except ModelFitError:
            continue
        arrival_models[model.day_type] = model
        print(f"{model.day_type}: expected daily arrivals "
              f"{model.expected_daily_count:.2f}")
    slot_models = fit_slot_models(history, inputs.clock)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(outdir / "models.json",
                      dump_models_json(arrival_models, slot_models))
    print(f"wrote {outdir / 'models.json'} "
          f"({len(slot_models.populated_slots)} populated slots)")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    if len(set(args.scenario)) < 2 and len(args.scenario) < 2:
        print("error: compare needs at least two scenarios", file=sys.stderr)
        return 2
    inputs = _resolve_inputs(args)
    for note in inputs.warnings:
        print(f"warning: {note}", file=sys.stderr)
    traces, metrics = _run_days(args, inputs, args.scenario)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    w = csv.writer(buf)
    scenarios = list(metrics)
    w.writerow(["date"]
               + [f"cost_{s}" for s in scenarios]
               + [f"delta_emin_{s}" for s in scenarios])
    sums = {s: [0.0, 0.0] for s in scenarios}
    for i, d in enumerate(sorted(inputs.days)):
        row = [d.isoformat()]
        for s in scenarios:
            sums[s][0] += metrics[s][i].total_cost
        for s in scenarios:
            sums[s][1] += metrics[s][i].delta_e_min
        row += [f"{sums[s][0]:.6f}" for s in scenarios]
        row += [f"{sums[s][1]:.6f}" for s in scenarios]
        w.writerow(row)
    atomic_write_text(outdir / "compare.csv", buf.getvalue())
    _print_summary(metrics)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser)
    try:
        return args.func(args)
    except (OSError, ValueError, ModelFitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
