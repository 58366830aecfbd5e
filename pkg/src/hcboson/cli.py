"""Command-line interface.

Subcommands: trace, analyze, figure, frame-build, sweep. Exit codes:
0 success, 2 configuration error, 3 numerical failure, 4 trend assertion
failure. The output directory resolves as --out, else $HCBOSON_OUTDIR,
else the config's [output] directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, figures, runner, sweep, wannier
from .config import (RunConfig, apply_overrides, config_to_mapping,
                     default_config_text, load_config)
from .errors import ConfigError, HcbError, NumericalError, TrendError
from .output import atomic_write, atomic_write_json
from .trace import format_trace, read_trace

OUTDIR_ENV = "HCBOSON_OUTDIR"


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    return cfg.validate()


def _out_dir(args, cfg: RunConfig) -> str:
    if getattr(args, "out", None):
        return args.out
    return os.environ.get(OUTDIR_ENV) or cfg.directory


def _label(cfg: RunConfig) -> str:
    if cfg.label:
        return cfg.label
    shape = cfg.shape if cfg.shape != "grid" else f"grid{cfg.rows}x{cfg.cols}"
    sites = "-".join(str(s) for s in cfg.initial_sites)
    return f"{shape}_n{cfg.n_sites()}_N{cfg.n_particles}_i{sites}"


def cmd_trace(args) -> int:
    cfg = _resolve_config(args)
    if args.dry_run:
        print(json.dumps(config_to_mapping(cfg), indent=2, sort_keys=True))
        return 0
    trace = runner.run_trace(cfg)
    out = _out_dir(args, cfg)
    label = _label(cfg)
    trace_path = os.path.join(out, f"{label}_trace.csv")
    atomic_write(trace_path, format_trace(trace))
    atomic_write_json(os.path.join(out, f"{label}_run.json"),
                      runner.sidecar_payload(cfg, {"trace": trace_path}))
    print(trace_path)
    return 0


def cmd_analyze(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args, cfg)
    header = ("file,k,b,r2_lin,A,omega,r2_sat,T,found,applicable,"
              "armed_at,epsilon_at_T")
    lines = [header]
    reports = {}
    for path in args.traces:
        trace = read_trace(path)
        column = args.column
        if column == "auto":
            column = "s_w" if trace.has_w else "s_f"
        report = runner.analyze_trace(trace, column, args.eps,
                                      args.sat_column)
        reports[path] = report
        lin = report.get("linear", {})
        sat = report.get("saturation", {})
        per = report["period"]

        def fmt(block, key):
            val = block.get(key, "")
            return repr(val) if isinstance(val, float) else str(val)

        lines.append(",".join([
            os.path.basename(path),
            fmt(lin, "k"), fmt(lin, "b"), fmt(lin, "r2"),
            fmt(sat, "A"), fmt(sat, "omega"), fmt(sat, "r2"),
            repr(per["T"]) if per["found"] else "",
            "true" if per["found"] else "false",
            "true" if per["applicable"] else "false",
            repr(per["armed_at"]) if per["armed_at"] is not None else "",
            repr(per["epsilon_at_T"]) if per["epsilon_at_T"] is not None else "",
        ]))
    stem = args.report_name
    atomic_write(os.path.join(out, f"{stem}.csv"), "\n".join(lines) + "\n")
    atomic_write_json(os.path.join(out, f"{stem}.json"), reports)
    print(os.path.join(out, f"{stem}.csv"))
    return 0


def cmd_figure(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args, cfg)
    overrides = {}
    if args.n_particles is not None:
        overrides["n_particles"] = args.n_particles
        overrides["initial_sites"] = tuple(range(args.n_particles))
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    result = figures.run_figure(args.figure_id, out_dir=out,
                                overrides=overrides or None,
                                workers=args.workers)
    print(figures.format_report(result), end="")
    return 0


def cmd_frame_build(args) -> int:
    cfg = _resolve_config(args)
    grid = wannier.make_phase_grid(x0=cfg.x0, k0=cfg.k0, zeta=cfg.zeta,
                                   wx=cfg.wx, wk=cfg.wk, dx=cfg.grid_dx,
                                   extent=cfg.extent)
    frame = wannier.build_frame(grid, oscillator_length=cfg.oscillator_length,
                                leak_tol=cfg.leak_tol)
    out = _out_dir(args, cfg)
    path = args.frame_out or os.path.join(out, f"frame_{frame.frame_hash}.txt")
    atomic_write(path, frame.export_text())
    md = wannier.macro_spreads(frame)
    print(f"frame {frame.frame_hash}: {frame.n_cells} cells, "
          f"leakage=({frame.leakage[0]:.3e}, {frame.leakage[1]:.3e}), "
          f"max|<q>-jx*x0|={np.max(np.abs(md.q_means - frame.cell_index[:, 0] * grid.x0)):.3e}")
    print(path)
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    out = _out_dir(args, cfg)
    if args.family in ("vary-n", "vary-N"):
        values = [int(v) for v in args.values]
    elif args.family == "vary-position":
        values = [tuple(int(s) for s in v.split("-")) for v in args.values]
    else:
        values = list(args.values)
    points, rows = sweep.run_sweep(cfg, args.family, values,
                                   workers=args.workers)
    stem = args.report_name
    atomic_write(os.path.join(out, f"{stem}.csv"), sweep.format_sweep_csv(rows))
    atomic_write_json(os.path.join(out, f"{stem}.json"),
                      sweep.sweep_sidecar(cfg, args.family, values, rows))
    print(os.path.join(out, f"{stem}.csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hcboson",
        description="Hard-core boson dynamics and phase-space entropies")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config-template", action="store_true",
                        help="print a fully-commented config template and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="INI or JSON config (JSON sidecars work)")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--out", help=f"output directory (else ${OUTDIR_ENV} "
                                     f"or the config's [output] directory)")

    p_trace = sub.add_parser("trace", help="run one system and write its "
                                           "entropy trace CSV + JSON sidecar")
    common(p_trace)
    p_trace.add_argument("--dry-run", action="store_true",
                         help="print the resolved config and exit")
    p_trace.set_defaults(func=cmd_trace)

    p_an = sub.add_parser("analyze", help="fit and period-scan trace files")
    common(p_an)
    p_an.add_argument("traces", nargs="+", help="trace CSV files")
    p_an.add_argument("--column", default="auto",
                      choices=["auto", "s_f", "s_w"],
                      help="period-scan column (auto: s_w when present)")
    p_an.add_argument("--sat-column", default="s_f", choices=["s_f", "s_w"],
                      help="saturation-fit column (the law has no "
                           "intercept, so s_f is the meaningful default)")
    p_an.add_argument("--eps", type=float, default=0.2)
    p_an.add_argument("--report-name", default="analysis")
    p_an.set_defaults(func=cmd_analyze)

    p_fig = sub.add_parser("figure", help="run a canned figure family and "
                                          "assert its trends")
    common(p_fig)
    p_fig.add_argument("figure_id", help=f"one of {', '.join(figures.FIGURE_IDS)}")
    p_fig.add_argument("--workers", type=int, default=1)
    p_fig.add_argument("--n-particles", type=int, default=None,
                       help="override N (fig11 exposes it; the study never "
                            "states the value)")
    p_fig.add_argument("--horizon", type=float, default=None,
                       help="override the period-search horizon")
    p_fig.set_defaults(func=cmd_figure)

    p_fr = sub.add_parser("frame-build", help="build, diagnose and export a "
                                              "Wannier frame")
    common(p_fr)
    p_fr.add_argument("--frame-out", help="frame file path")
    p_fr.set_defaults(func=cmd_frame_build)

    p_sw = sub.add_parser("sweep", help="run an experiment family")
    common(p_sw)
    p_sw.add_argument("--family", required=True,
                      choices=["vary-n", "vary-N", "vary-position",
                               "vary-shape"])
    p_sw.add_argument("values", nargs="+",
                      help="family values: n list, N list, site tuples like "
                           "0-1, or shapes (chain, ring, grid:RxC)")
    p_sw.add_argument("--workers", type=int, default=1)
    p_sw.add_argument("--report-name", default="sweep")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config_template:
        print(default_config_text(), end="")
        return 0
    if not getattr(args, "command", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except TrendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HcbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
