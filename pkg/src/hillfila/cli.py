"""Command-line front end: run, trace, validate, plot.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .biot_savart import set_threads
from .diagnostics import C0_HILL, DiagnosticsWriter, Monitor, read_diagnostics_csv
from .evolution import StepError, run
from .flow_map import advect_many, classify_axis_fate, first_front_time, write_path_csv
from .geometry import HalfPlanePoint
from .scenarios import make_scenario, numerics_from
from .snapshots import load_history, snapshot_name, write_snapshot
from .validation import run_validation

log = logging.getLogger("hillfila")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hillfila", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate a scenario and write diagnostics and snapshots")
    r.add_argument("--scenario", choices=cfgmod.SCENARIOS)
    r.add_argument("--config", type=Path)
    r.add_argument("--dt", type=float)
    r.add_argument("--t-end", type=float)
    r.add_argument("--h-quad", type=float)
    r.add_argument("--out", type=Path)
    r.add_argument("--snapshot-every", type=int)
    r.add_argument("--match-volume", action=argparse.BooleanOptionalAction, default=None)

    t = sub.add_parser("trace", help="advect seed points through a stored run")
    t.add_argument("--out", type=Path, required=True, help="directory of a finished run")
    t.add_argument("--seed-points", type=Path, help="CSV of r,z seeds (default: axis seeds)")
    t.add_argument("--margin", type=float)
    t.add_argument("--dt", type=float)

    sub.add_parser("validate", help="run the analytic-oracle suite")

    g = sub.add_parser("plot", help="write a gnuplot script for a run directory")
    g.add_argument("--out", type=Path, required=True)
    return p


def resolve_config(args) -> cfgmod.ScenarioConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.ScenarioConfig()
    overrides = {
        "scenario": args.scenario, "dt": args.dt, "t_end": args.t_end, "h_quad": args.h_quad,
        "out": None if args.out is None else str(args.out),
        "snapshot_every": args.snapshot_every, "match_volume": args.match_volume,
    }
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.resolved()


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
        state = make_scenario(cfg)
    except (cfgmod.ConfigError, ValueError) as exc:
        print(f"hillfila: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.out)
    snaps = out / "snapshots"
    snaps.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(
        cfgmod.serialize(cfg) + f"# fs_ratio reference (Hill vortex): {C0_HILL!r}\n")
    monitor = Monitor(h_quad=cfg.h_quad, h_energy=cfg.h_energy, bracket=cfg.bracket,
                      h_ins=cfg.h_ins, h_probe=cfg.h_probe)

    with DiagnosticsWriter(out / "diagnostics.csv") as writer:
        def observe(st):
            rec = monitor(st)
            writer.write(rec)
            return rec

        def on_snapshot(st, k):
            write_snapshot(snaps / snapshot_name(st, k), st)

        try:
            res = run(state, cfg.dt, cfg.t_end, numerics=numerics_from(cfg),
                      observers=[observe], observe_every=cfg.observe_every,
                      snapshot_every=cfg.snapshot_every, on_snapshot=on_snapshot)
        except (StepError, RuntimeError) as exc:
            print(f"hillfila: run aborted: {exc}", file=sys.stderr)
            return EXIT_FAIL
    if not res.completed:
        print(f"hillfila: {res.message}", file=sys.stderr)
    print(f"wrote {out}/diagnostics.csv ({len(res.records)} rows), final t={res.final.t:.6g}")
    return EXIT_OK


def _read_seeds(path) -> np.ndarray:
    if path is None:
        return np.array([[0.0, -1.5], [0.0, 0.0], [0.0, 1.5]])
    seeds = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    if seeds.shape[1] != 2:
        raise ValueError("seed file needs two columns r,z")
    return seeds


def cmd_trace(args) -> int:
    run_dir = args.out
    try:
        cfg = cfgmod.load(run_dir / "config.resolved")
        seeds = _read_seeds(args.seed_points)
        hist = load_history(run_dir, cfg.h_quad, cfg.floor_levels)
        recs = read_diagnostics_csv(run_dir / "diagnostics.csv")
    except (cfgmod.ConfigError, OSError, ValueError) as exc:
        print(f"hillfila: cannot trace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    margin = cfg.margin if args.margin is None else args.margin
    dt = cfg.trace_dt if args.dt is None else args.dt
    taus = ([r.t for r in recs], [r.tau for r in recs])
    t0, t1 = hist.span
    times, ys = advect_many(hist, t0, seeds, t1, dt)
    tdir = run_dir / "trace"
    tdir.mkdir(exist_ok=True)
    with open(tdir / "fates.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "r0", "z0", "fate", "front_time"])
        for k, (r0, z0) in enumerate(seeds):
            path = [(float(t), HalfPlanePoint(float(p[0]), float(p[1])))
                    for t, p in zip(times, ys[:, k])]
            write_path_csv(tdir / f"path_{k:03d}.csv", path)
            try:
                fate = classify_axis_fate(path, taus, margin).value
            except ValueError as exc:
                fate = "n/a" if r0 != 0 else f"unclassified ({exc})"
            w.writerow([k, "%.17g" % r0, "%.17g" % z0, fate,
                        "%.17g" % first_front_time(path, taus, margin)])
            print(f"seed {k} ({r0:g}, {z0:g}): {fate}")
    return EXIT_OK


def cmd_validate(_args) -> int:
    results = run_validation()
    ok = all(r.passed for r in results)
    print("validation", "PASSED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_FAIL


PLOT_TEMPLATE = """\
# gnuplot script generated by hillfila plot
set datafile separator ","
set key autotitle columnhead
set terminal pngcairo size 1200,900
set output "{out}/diagnostics.png"
set multiplot layout 2,2
set xlabel "t"
plot "{out}/diagnostics.csv" using "t":"tau" with lines, \\
     "" using "t":(W*column("t")) with lines title "W t"
plot "{out}/diagnostics.csv" using "t":"diameter" with lines, "" using "t":"perimeter" with lines
plot "{out}/diagnostics.csv" using "t":"sup_vorticity" with lines, "" using "t":"max_dr_xi" with lines
plot "{out}/diagnostics.csv" using "t":"fs_ratio" with lines
unset multiplot
set output "{out}/snapshots.png"
set size ratio -1
set xlabel "r"
set ylabel "z"
plot {snapshots}
"""


def cmd_plot(args) -> int:
    out = args.out
    if not (out / "diagnostics.csv").exists():
        print(f"hillfila: no diagnostics.csv in {out}", file=sys.stderr)
        return EXIT_USAGE
    snaps = sorted((out / "snapshots").glob("*.csv"))
    items = ", ".join(f'"{p}" using 1:2 with lines title "{p.stem}"' for p in snaps) or "0 notitle"
    script = "W = 2.0/15.0\n" + PLOT_TEMPLATE.format(out=out, snapshots=items)
    (out / "plot.gp").write_text(script)
    print(f"wrote {out}/plot.gp (run: gnuplot {out}/plot.gp)")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads()
    handler = {"run": cmd_run, "trace": cmd_trace, "validate": cmd_validate, "plot": cmd_plot}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
