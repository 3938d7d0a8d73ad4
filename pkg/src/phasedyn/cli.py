"""Command-line front end: run simulations, validate network files, compare
trajectory CSVs.

Exit status is 0 on success and nonzero when an error artifact was produced
(engine abort, bad input file, mismatched comparison).  Set PHASEDYN_LOG to
debug/info/warning to control verbosity.
"""

import argparse
import json
import logging
import os
import sys
import time

from . import engine, metrics, netmodel

log = logging.getLogger("phasedyn")

_PLOT_GROUPS = ("speed_dev_hz", "delta_rad", "te_pu", "vmag_pu", "vang_rad")


def _parse_record(text):
    items = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        kind, _, ident = part.partition(".")
        if kind not in ("gen", "bus") or not ident:
            raise ValueError("bad record spec %r (want gen.<id> or bus.<id>)" % part)
        items.append((kind, ident))
    return items


def _write_plots(series, outdir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for group in _PLOT_GROUPS:
        cols = [c for c in series.columns() if c.endswith("." + group)]
        if not cols:
            continue
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for c in cols[:24]:
            ax.plot(series.time, series[c], label=c, linewidth=0.9)
        ax.set_xlabel("time (s)")
        ax.set_ylabel(group)
        ax.grid(True, alpha=0.3)
        if len(cols) <= 12:
            ax.legend(fontsize=6)
        path = os.path.join(outdir, "%s.svg" % group)
        fig.savefig(path, format="svg")
        plt.close(fig)
        written.append(path)
    return written


def cmd_run(args):
    if not os.path.exists(args.network):
        print("error: network file not found: %s" % args.network, file=sys.stderr)
        return 1
    try:
        net = netmodel.load_network(args.network)
    except (netmodel.ParseError, netmodel.ValidationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1

    events, meta = [], {}
    if args.scenario:
        if not os.path.exists(args.scenario):
            print("error: scenario file not found: %s" % args.scenario, file=sys.stderr)
            return 1
        events, meta = engine.parse_scenario(args.scenario)

    duration = args.duration if args.duration is not None else meta.get("duration_s")
    if duration is None:
        print("error: no duration given (use --duration or duration_s in the scenario)",
              file=sys.stderr)
        return 1
    record = _parse_record(args.record) if args.record else meta.get("record")

    kwargs = {"duration": duration}
    if args.dt is not None:
        kwargs["dt"] = args.dt
    if args.eps is not None:
        kwargs["eps"] = args.eps
    cfg = engine.EngineConfig(record=record, **kwargs)

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "trajectories.csv")
    summary = {
        "network": args.network,
        "scenario": args.scenario,
        "config": {"dt": cfg.dt, "eps": cfg.eps, "duration": cfg.duration},
        "events": [
            {"time_s": ev.time_s, "action": ev.action, **ev.params} for ev in events
        ],
    }
    stats = {}
    t0 = time.perf_counter()
    status = 0
    try:
        series = engine.run(net, cfg, events, stats=stats)
        series.to_csv(csv_path)
        summary["status"] = "ok"
    except engine.SimulationAborted as exc:
        exc.series.to_csv(csv_path)
        with open(csv_path, "a") as f:
            f.write("# truncated: %s\n" % exc)
        summary["status"] = "aborted"
        summary["abort_reason"] = str(exc)
        series = exc.series
        status = 1
        log.error("%s", exc)
    summary["wall_time_s"] = time.perf_counter() - t0
    summary["solver"] = stats

    with open(os.path.join(args.out, "run_summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
    if len(series.time):
        _write_plots(series, args.out)
    print("wrote %s (%d rows, %d columns), status=%s"
          % (csv_path, len(series.time), len(series.columns()), summary["status"]))
    return status


def cmd_validate(args):
    path = args.path
    if not os.path.exists(path):
        print("parse error: file not found: %s" % path)
        return 0
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        print("parse error: %s" % exc)
        return 0
    try:
        net = netmodel.parse_network(data)
        problems = []
    except netmodel.ParseError as exc:
        print("parse error: %s" % exc)
        return 0
    except netmodel.ValidationError as exc:
        problems = str(exc).split("; ")
        net = None

    if net is not None:
        islands = netmodel.energized_islands(net)
        live = sum(1 for i in islands if i.energized)
        print(
            "%d buses, %d lines, %d transformers, %d loads, %d switches, "
            "%d sources, %d injections, %d machines"
            % (
                len(net.buses), len(net.branches), len(net.transformers),
                len(net.loads), len(net.switches), len(net.sources),
                len(net.injections), len(net.machines),
            )
        )
        print("%d island(s): %d energized, %d de-energized"
              % (len(islands), live, len(islands) - live))
        print("OK: all invariants hold")
    else:
        print("%d problem(s):" % len(problems))
        for p in problems:
            print("  - %s" % p)
    return 0


def cmd_compare(args):
    try:
        sa = engine.TimeSeries.from_csv(args.csv_a)
        sb = engine.TimeSeries.from_csv(args.csv_b)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1

    if args.columns:
        cols = [c.strip() for c in args.columns.split(",") if c.strip()]
        missing = [c for c in cols if c not in sa.data or c not in sb.data]
        if missing:
            print("error: columns missing from input: %s" % ", ".join(missing), file=sys.stderr)
            return 1
    else:
        cols = [c for c in sa.columns() if c in sb.data]
        if not cols:
            print("error: the files share no columns", file=sys.stderr)
            return 1

    if len(sa.time) != len(sb.time):
        print("error: row counts differ (%d vs %d)" % (len(sa.time), len(sb.time)),
              file=sys.stderr)
        return 1
    import numpy as np

    if len(sa.time) > 1 and not np.allclose(sa.time, sb.time, rtol=0, atol=1e-9):
        print("error: time axes differ; equal sampling is required", file=sys.stderr)
        return 1

    spacing = float(sa.time[1] - sa.time[0]) if len(sa.time) > 1 else 1.0
    table = {}
    width = max(len(c) for c in cols)
    print("%-*s  %12s  %12s" % (width, "column", "rmse", "correlation"))
    for c in cols:
        pair = metrics.TrajectoryPair(sa[c], sb[c], spacing)
        r = metrics.rmse(pair)
        try:
            corr = metrics.correlation(pair)
            corr_txt = "%12.6f" % corr
        except ValueError:
            corr = None
            corr_txt = "%12s" % "n/a"
        table[c] = {"rmse": r, "correlation": corr}
        print("%-*s  %12.6g  %s" % (width, c, r, corr_txt))
    if args.out:
        with open(args.out, "w") as f:
            json.dump(table, f, indent=2)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phasedyn",
        description="Three-phase electromechanical transient simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation")
    p_run.add_argument("--network", required=True, help="network JSON file")
    p_run.add_argument("--scenario", help="scenario JSON file")
    p_run.add_argument("--dt", type=float, help="step size in seconds (default 1/240)")
    p_run.add_argument("--eps", type=float, help="sub-step sampling offset in seconds")
    p_run.add_argument("--duration", type=float, help="simulated seconds")
    p_run.add_argument("--record", help="comma list of gen.<id>/bus.<id> to record")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a network file")
    p_val.add_argument("path")
    p_val.set_defaults(func=cmd_validate)

    p_cmp = sub.add_parser("compare", help="compare two trajectory CSVs")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    p_cmp.add_argument("--columns", help="comma list of columns (default: shared)")
    p_cmp.add_argument("--out", help="write the metrics table to this JSON file")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    logging.basicConfig(
        level=getattr(logging, os.environ.get("PHASEDYN_LOG", "warning").upper(), logging.WARNING)
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
