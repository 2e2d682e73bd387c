"""Command-line front end: each experiment is a subcommand that writes CSV
results (and SVG plots unless --no-plot) plus a run manifest.

Units in all CSV files follow the reporting conventions: currents in uA,
power in uW, energy in pJ, resistance in kOhm. Exit codes: 0 success,
2 config error, 3 solver/calibration failure, 4 data error.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, calibrate as cal, cells, crossbar, pipeline, svgplot
from .params import ConfigError, config_hash, load_config, save_config
from .solver import NoOperatingPoint

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_DATA = 4

DATASETS = ("iris", "wine", "breast_cancer", "banknote")
DEFAULT_SEED = 12


class _Run:
    """Shared run state: config, seed, output directory, provenance."""

    def __init__(self, args):
        self.args = args
        self.cfg = load_config(args.config)
        self.seed = args.seed
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg_hash = config_hash(args.config)
        self.plots = not args.no_plot

    def kinds(self):
        return ("1t1r", "3t1r") if self.args.kind == "both" else (self.args.kind,)

    def header(self) -> str:
        return f"# seed={self.seed} config_sha256={self.cfg_hash}\n"

    def write_csv(self, name: str, columns, rows) -> Path:
        path = self.out / name
        with open(path, "w") as fh:
            fh.write(self.header())
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")
        return path

    def manifest(self, command: str, outputs) -> None:
        data = {
            "command": command,
            "seed": self.seed,
            "config_sha256": self.cfg_hash,
            "config_path": str(self.args.config) if self.args.config else "builtin",
            "package_version": __version__,
            "outputs": [str(p.name) for p in outputs],
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _dataset_path(args, name: str) -> str:
    if args.data_dir:
        return str(Path(args.data_dir) / f"{name}.csv")
    return str(resources.files("memdpe").joinpath(f"data/datasets/{name}.csv"))


def _parse_grid(text: str, scale: float = 1.0):
    return [float(x) * scale for x in text.split(",") if x]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sweep_set(run: _Run) -> int:
    drives = _parse_grid(run.args.drives)
    rows = []
    series = {k: ([], []) for k in run.kinds()}
    for kind in run.kinds():
        for d in drives:
            i_set = cells.set_current(run.cfg, kind, d)
            rail = (d if kind == "1t1r" else run.cfg.three_t1r.vdd)
            p_set = rail * i_set
            rows.append([kind, d, i_set * 1e6, p_set * 1e6])
            series[kind][0].append(d)
            series[kind][1].append(i_set * 1e6)
    out = [run.write_csv("sweep_set.csv",
                         ["kind", "drive_v", "i_set_ua", "p_set_uw"], rows)]
    if run.plots:
        path = run.out / "sweep_set.svg"
        svgplot.plot_lines(path, [(k, xs, ys) for k, (xs, ys) in series.items()],
                           "SET drive (V)", "SET current (uA)",
                           "SET current vs drive", logy=True)
        out.append(path)
    run.manifest("sweep-set", out)
    return EXIT_OK


def cmd_sweep_read(run: _Run) -> int:
    rs = _parse_grid(run.args.resistances, scale=1e3)
    rows = []
    series = {}
    for kind in run.kinds():
        xs, ys = [], []
        for r in rs:
            rr = cells.read_current(run.cfg, cells.CellInstance(kind, r),
                                    accounting=run.args.accounting)
            rows.append([kind, r / 1e3, rr.i_out * 1e6, rr.i_in * 1e6,
                         rr.power * 1e6, rr.energy * 1e12])
            xs.append(r / 1e3)
            ys.append(rr.i_out * 1e6)
        series[kind] = (xs, ys)
    out = [run.write_csv("sweep_read.csv",
                         ["kind", "r_kohm", "i_out_ua", "i_in_ua", "p_uw", "e_pj"],
                         rows)]
    if run.plots:
        path = run.out / "sweep_read.svg"
        svgplot.plot_lines(path, [(k, xs, ys) for k, (xs, ys) in series.items()],
                           "programmed resistance (kOhm)", "READ current (uA)",
                           "READ current vs resistance", logy=True)
        out.append(path)
    run.manifest("sweep-read", out)
    return EXIT_OK


def cmd_monte_carlo(run: _Run) -> int:
    r = run.args.r_kohm * 1e3
    n = run.args.n
    stat_rows = []
    hist_rows = []
    out = []
    for kind in run.kinds():
        st = cells.monte_carlo_read(run.cfg, kind, r, n, seed=run.seed,
                                    accounting=run.args.accounting)
        stat_rows.append([kind, r / 1e3, st.n, st.mean * 1e6, st.std * 1e6,
                          st.min * 1e6, st.max * 1e6])
        for c, lo, hi in zip(st.hist_counts, st.hist_edges[:-1], st.hist_edges[1:]):
            hist_rows.append([kind, lo * 1e6, hi * 1e6, int(c)])
        if run.plots:
            path = run.out / f"monte_carlo_hist_{kind}.svg"
            svgplot.plot_hist(path, st.hist_counts, st.hist_edges * 1e6,
                              "READ current (uA)", f"{kind} READ at {r/1e3:g} kOhm")
            out.append(path)
    out.insert(0, run.write_csv("monte_carlo_stats.csv",
                                ["kind", "r_kohm", "n", "mean_ua", "std_ua",
                                 "min_ua", "max_ua"], stat_rows))
    out.insert(1, run.write_csv("monte_carlo_hist.csv",
                                ["kind", "bin_lo_ua", "bin_hi_ua", "count"],
                                hist_rows))
    run.manifest("monte-carlo", out)
    return EXIT_OK


def cmd_pulse_width(run: _Run) -> int:
    drives = _parse_grid(run.args.drives)
    widths = _parse_grid(run.args.widths)
    rows = []
    series = []
    for kind in run.kinds():
        for d in drives:
            xs, ys = [], []
            for w in widths:
                top = cells.read_topology(run.cfg, kind)
                from .devices import state_for_resistance
                from .solver import transient_set
                m0 = state_for_resistance(run.cfg.memristor, run.cfg.memristor.r_off)
                res = transient_set(top, d, w, m0, dt=run.cfg.programming.dt_s)
                rows.append([kind, d, w, res.final_resistance / 1e3])
                xs.append(w)
                ys.append(res.final_resistance / 1e3)
            series.append((f"{kind} {d:g}V", xs, ys))
    out = [run.write_csv("pulse_width.csv",
                         ["kind", "drive_v", "width_s", "final_r_kohm"], rows)]
    if run.plots:
        path = run.out / "pulse_width.svg"
        svgplot.plot_lines(path, series, "pulse width (s)",
                           "programmed resistance (kOhm)",
                           "SET sensitivity to pulse width", logx=True, logy=True)
        out.append(path)
    run.manifest("pulse-width", out)
    return EXIT_OK


def cmd_classify(run: _Run) -> int:
    names = DATASETS if run.args.dataset == "all" else (run.args.dataset,)
    cols = ["dataset", "kind", "mode", "train_acc_pct", "test_acc_pct",
            "tie_rate_pct", "mean_energy_pj", "energy_improvement_x"]
    rows = []
    outputs = []
    for name in names:
        ds = pipeline.load_dataset(name, _dataset_path(run.args, name))
        per_kind = {}
        for kind in run.kinds():
            if run.args.ideal:
                ml = run.cfg.ml.for_dataset(name)
                s = run.seed + ml.seed_offset
                enc = pipeline.encode(ds, bins=ml.bins, split_seed=s,
                                      train_frac=ml.train_frac)
                model = pipeline.train(enc, epochs=ml.epochs, lr=ml.lr, seed=s,
                                       init_scale=ml.init_scale)
                cmap = pipeline.map_to_conductance(model, ml.g_low_s, ml.g_high_s)
                acc = pipeline.evaluate_ideal(cmap, enc)
                rows.append([name, kind, "ideal", 100 * model.train_accuracy,
                             acc, 0.0, 0.0, 0.0])
                continue
            m, model, enc, xb = pipeline.run_classification(
                run.cfg, ds, kind, seed=run.seed, noise=run.args.noise,
                accounting=run.args.accounting)
            per_kind[kind] = m
            rows.append([name, kind, "hardware", 100 * model.train_accuracy,
                         m.accuracy_pct, m.tie_rate_pct, m.mean_energy_pj, 0.0])
            conf_rows = [[i] + list(map(int, m.confusion[i]))
                         for i in range(m.confusion.shape[0])]
            outputs.append(run.write_csv(
                f"confusion_{name}_{kind}.csv",
                ["true_class"] + [f"pred_{j}" for j in range(m.confusion.shape[1])],
                conf_rows))
        if len(per_kind) == 2:
            ratio = per_kind["1t1r"].mean_energy_pj / per_kind["3t1r"].mean_energy_pj
            for row in rows:
                if row[0] == name and row[2] == "hardware":
                    row[7] = ratio
    outputs.insert(0, run.write_csv("classify.csv", cols, rows))
    run.manifest("classify", outputs)
    return EXIT_OK


def cmd_compare(run: _Run) -> int:
    r_ref = 5e3
    rr1 = cells.read_current(run.cfg, cells.CellInstance("1t1r", r_ref))
    rr3 = cells.read_current(run.cfg, cells.CellInstance("3t1r", r_ref))
    p1 = cells.cell_power(run.cfg, "1t1r", rr1.i_out, rr1.i_in, "full")
    p3 = cells.cell_power(run.cfg, "3t1r", rr3.i_out, rr3.i_in, "full")
    t = run.cfg.t_read_s
    rows = [
        ["read_current_ua", rr1.i_out * 1e6, (rr3.i_out + rr3.i_in) * 1e6,
         rr1.i_out / (rr3.i_out + rr3.i_in)],
        ["read_power_uw", p1 * 1e6, p3 * 1e6, p1 / p3],
        ["read_energy_pj", p1 * t * 1e12, p3 * t * 1e12, (p1 * t) / (p3 * t)],
    ]
    out = [run.write_csv("compare.csv",
                         ["metric", "this_1t1r", "this_3t1r", "ratio_1t1r_over_3t1r"],
                         rows)]
    run.manifest("compare", out)
    return EXIT_OK


def cmd_calibrate(run: _Run) -> int:
    cfg, reports = cal.run_staged_calibration(run.cfg,
                                              maxiter=run.args.maxiter,
                                              verbose=True)
    cfg_path = run.out / "calibrated_params.json"
    save_config(cfg, cfg_path)
    rows = []
    for stage, res in reports:
        for m, d, a, e, w in res.rows:
            rows.append([stage, m, d, a, e, w])
    out = [run.write_csv("calibration_report.csv",
                         ["stage", "metric", "desired", "achieved", "rel_err",
                          "weight"], rows), cfg_path]
    run.manifest("calibrate", out)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="memdpe",
        description="1T1R/3T1R memristive DPE simulator experiments")
    p.add_argument("--config", default=None, help="parameter config JSON "
                   "(default: the shipped calibrated set)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--kind", choices=["1t1r", "3t1r", "both"], default="both")
    p.add_argument("--accounting", choices=["full", "final-stage"],
                   default="full")
    p.add_argument("--ideal", action="store_true",
                   help="classify: ideal linear currents and perfect ADC")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--data-dir", default=None,
                   help="directory with dataset CSVs (default: packaged)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep-set", help="SET current vs drive")
    s.add_argument("--drives", default="0.8,0.85,0.9,0.95,1.0,1.05,1.1,1.15,1.2")
    s.set_defaults(fn=cmd_sweep_set)

    s = sub.add_parser("sweep-read", help="READ current vs resistance")
    s.add_argument("--resistances", default="5,6,7,8,9,10,12,14,16,18,20",
                   help="kOhm values, comma separated")
    s.set_defaults(fn=cmd_sweep_read)

    s = sub.add_parser("monte-carlo", help="READ-current process variation")
    s.add_argument("--r-kohm", type=float, default=9.0)
    s.add_argument("--n", type=int, default=1000)
    s.set_defaults(fn=cmd_monte_carlo)

    s = sub.add_parser("pulse-width", help="SET sensitivity to pulse width")
    s.add_argument("--drives", default="0.8,1.0,1.2")
    s.add_argument("--widths", default="1e-7,1e-6,1e-5,1e-4,1e-3")
    s.set_defaults(fn=cmd_pulse_width)

    s = sub.add_parser("classify", help="DPE classification on a dataset")
    s.add_argument("--dataset", default="all",
                   choices=list(DATASETS) + ["all"])
    s.add_argument("--noise", action="store_true",
                   help="program cells with variation and LRS noise")
    s.set_defaults(fn=cmd_classify)

    s = sub.add_parser("compare", help="single-synapse READ comparison table")
    s.set_defaults(fn=cmd_compare)

    s = sub.add_parser("calibrate", help="re-run parameter calibration")
    s.add_argument("--maxiter", type=int, default=350)
    s.set_defaults(fn=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = _Run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(run)
    except (NoOperatingPoint, cal.CalibrationDiverged) as exc:
        print(f"solver/calibration failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (pipeline.ParseError, pipeline.SchemaError, cells.TargetUnreachable) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
