"""Canned experiment families reproducing the trend content of the study's
figures, each with machine-checked trend assertions.

Every family emits plot-ready CSV plus a pass/fail report; a failed trend
raises TrendError after all outputs are written (CLI exit code 4). Trends
are asserted, never absolute values: the source study does not fix J, U,
the packet width or the window, so only orderings and monotone relations
are reproducible.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, runner
from .config import RunConfig
from .errors import TrendError, ValidationError
from .output import atomic_write, atomic_write_json
from .trace import EntropyTrace, format_trace


def _period_point(args):
    cfg, column, eps, horizon = args
    return runner.find_period(cfg, column=column, eps=eps, horizon=horizon)


def _scan_periods(configs, workers: int = 1):
    """Order-preserving period scans, optionally across processes."""
    jobs = [(cfg, "s_f", cfg.eps, cfg.horizon) for cfg in configs]
    if workers <= 1:
        return [_period_point(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_period_point, jobs))


FIGURE_IDS = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig9", "fig10",
              "fig11", "fig12", "fig13", "fig14")

# One W=1 frame for all cross-run families: (k, b) comparisons are only
# meaningful inside a single frame, and the 9-cell window keeps the joint
# enumeration tractable up to n = 6.
_W_FAMILY = dict(wx=1, wk=1, leak_tol=0.3)


@dataclass(frozen=True)
class TrendCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class FigureResult:
    figure_id: str
    columns: tuple
    rows: list
    checks: list
    traces: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _strict(seq, direction: str):
    diffs = np.diff(np.asarray(seq, dtype=float))
    return bool(np.all(diffs > 0)) if direction == "up" else bool(np.all(diffs < 0))


def _seq_detail(names, vals):
    return ", ".join(f"{n}={v:.6g}" for n, v in zip(names, vals))


def _w_trace(cfg: RunConfig) -> EntropyTrace:
    return runner.run_trace(cfg, enable_w=True)


def _chain_family(ns, base: RunConfig) -> list[RunConfig]:
    return [base.with_overrides(shape="chain", n=n, n_particles=1,
                                initial_sites=(0,)) for n in ns]


def _base(overrides: dict | None) -> RunConfig:
    cfg = RunConfig(**_W_FAMILY)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg


def _linear_rows(configs, labels):
    rows, traces = [], {}
    for cfg, label in zip(configs, labels):
        trace = _w_trace(cfg)
        fit = analysis.fit_linear(trace)
        traces[label] = trace
        rows.append({"label": label, "n": cfg.n_sites(), "N": cfg.n_particles,
                     "init_sites": ";".join(map(str, cfg.initial_sites)),
                     "k": fit.k, "b": fit.b, "r2": fit.r2})
    return rows, traces


def fig3(overrides=None) -> FigureResult:
    """S_w(t) for chains n = 3..6, one particle at the left end."""
    ns = (3, 4, 5, 6)
    rows, traces = [], {}
    for cfg in _chain_family(ns, _base(overrides)):
        trace = _w_trace(cfg)
        traces[f"n{cfg.n}"] = trace
        rows.append({"n": cfg.n, "N": 1, "s_w0": float(trace.s_w[0]),
                     "s_w_min": float(np.min(trace.s_w)),
                     "s_w_max": float(np.max(trace.s_w))})
    mins = [r["s_w_min"] for r in rows]
    maxs = [r["s_w_max"] for r in rows]
    checks = [
        TrendCheck("min_s_w_increases_with_n", _strict(mins, "up"),
                   _seq_detail(ns, mins)),
        TrendCheck("max_s_w_increases_with_n", _strict(maxs, "up"),
                   _seq_detail(ns, maxs)),
    ]
    return FigureResult("fig3", ("n", "N", "s_w0", "s_w_min", "s_w_max"),
                        rows, checks, traces)


def fig4(overrides=None) -> FigureResult:
    """Linear S_w = k S_f + b fits for the fig3 systems."""
    ns = (3, 4, 5, 6)
    rows, traces = _linear_rows(_chain_family(ns, _base(overrides)),
                                [f"n{n}" for n in ns])
    ks = [r["k"] for r in rows]
    bs = [r["b"] for r in rows]
    r2s = [r["r2"] for r in rows]
    checks = [
        TrendCheck("linear_law_r2_above_0.9", all(r > 0.9 for r in r2s),
                   _seq_detail(ns, r2s)),
        TrendCheck("k_strictly_decreasing_in_n", _strict(ks, "down"),
                   _seq_detail(ns, ks)),
        TrendCheck("b_strictly_increasing_in_n", _strict(bs, "up"),
                   _seq_detail(ns, bs)),
        TrendCheck("b_positive", all(b > 0 for b in bs), _seq_detail(ns, bs)),
    ]
    return FigureResult("fig4", ("label", "n", "N", "init_sites", "k", "b", "r2"),
                        rows, checks, traces)


def fig5(overrides=None) -> FigureResult:
    """Intercept b against n (increasing, roughly linearly)."""
    inner = fig4(overrides)
    rows = [{"n": r["n"], "b": r["b"]} for r in inner.rows]
    bs = [r["b"] for r in rows]
    ns = [r["n"] for r in rows]
    lin = analysis.linear_fit_xy(ns, bs)
    checks = [
        TrendCheck("b_strictly_increasing_in_n", _strict(bs, "up"),
                   _seq_detail(ns, bs)),
        TrendCheck("b_vs_n_close_to_linear", lin.r2 > 0.99,
                   f"r2(b~n)={lin.r2:.6f}"),
    ]
    return FigureResult("fig5", ("n", "b"), rows, checks, inner.traces)


def fig6(overrides=None) -> FigureResult:
    """Slope k against n (slightly but strictly decreasing)."""
    inner = fig4(overrides)
    rows = [{"n": r["n"], "k": r["k"]} for r in inner.rows]
    ks = [r["k"] for r in rows]
    checks = [TrendCheck("k_strictly_decreasing_in_n", _strict(ks, "down"),
                         _seq_detail([r["n"] for r in rows], ks))]
    return FigureResult("fig6", ("n", "k"), rows, checks, inner.traces)


def _n5_particle_family(overrides):
    base = _base(overrides)
    return [base.with_overrides(shape="chain", n=5, n_particles=N,
                                initial_sites=tuple(range(N)))
            for N in (1, 2, 3, 4)]


def fig7(overrides=None) -> FigureResult:
    """S_w(t) on the 5-site chain for N = 1..4 (leftmost packing)."""
    rows, traces = [], {}
    for cfg in _n5_particle_family(overrides):
        trace = _w_trace(cfg)
        traces[f"N{cfg.n_particles}"] = trace
        rows.append({"N": cfg.n_particles, "s_w0": float(trace.s_w[0]),
                     "s_w_min": float(np.min(trace.s_w)),
                     "s_w_max": float(np.max(trace.s_w))})
    s0 = [r["s_w0"] for r in rows]
    checks = [TrendCheck("initial_s_w_increases_with_N", _strict(s0, "up"),
                         _seq_detail([r["N"] for r in rows], s0))]
    return FigureResult("fig7", ("N", "s_w0", "s_w_min", "s_w_max"),
                        rows, checks, traces)


def fig9(overrides=None) -> FigureResult:
    """Linear-law coefficients against particle number at n = 5."""
    configs = _n5_particle_family(overrides)
    rows, traces = _linear_rows(configs, [f"N{c.n_particles}" for c in configs])
    ks = [r["k"] for r in rows]
    bs = [r["b"] for r in rows]
    ns = [r["N"] for r in rows]
    db = np.diff(bs)
    checks = [
        TrendCheck("k_strictly_decreasing_in_N", _strict(ks, "down"),
                   _seq_detail(ns, ks)),
        TrendCheck("b_strictly_increasing_in_N", _strict(bs, "up"),
                   _seq_detail(ns, bs)),
        TrendCheck("b_increase_rate_slows", bool(np.all(np.diff(db) < 0)),
                   "increments " + _seq_detail(["d21", "d32", "d43"], db)),
    ]
    return FigureResult("fig9", ("label", "n", "N", "init_sites", "k", "b", "r2"),
                        rows, checks, traces)


def _n5_position_family(overrides):
    base = _base(overrides)
    return [base.with_overrides(shape="chain", n=5, n_particles=1,
                                initial_sites=(p,)) for p in (0, 1, 2)]


def fig10(overrides=None) -> FigureResult:
    """S_w(t) for one particle started at sites 0, 1, 2 of the 5-chain."""
    rows, traces = [], {}
    for cfg in _n5_position_family(overrides):
        trace = _w_trace(cfg)
        pos = cfg.initial_sites[0]
        traces[f"p{pos}"] = trace
        rows.append({"position": pos, "s_w_min": float(np.min(trace.s_w)),
                     "s_w_max": float(np.max(trace.s_w))})
    mins = [r["s_w_min"] for r in rows]
    maxs = [r["s_w_max"] for r in rows]
    # minima coincide exactly (shared sector floor); maxima agree to the
    # plot scale only - the end-site start explores a supremum ~0.07 nats
    # lower on any accessible horizon
    tol = 0.1
    checks = [
        TrendCheck("minima_agree_across_positions",
                   max(mins) - min(mins) < tol,
                   _seq_detail([r["position"] for r in rows], mins)),
        TrendCheck("maxima_agree_across_positions",
                   max(maxs) - min(maxs) < tol,
                   _seq_detail([r["position"] for r in rows], maxs)),
    ]
    return FigureResult("fig10", ("position", "s_w_min", "s_w_max"),
                        rows, checks, traces)


def fig12(overrides=None) -> FigureResult:
    """Linear-law coefficients are position-independent at fixed (n, N)."""
    configs = _n5_position_family(overrides)
    rows, traces = _linear_rows(configs,
                                [f"p{c.initial_sites[0]}" for c in configs])
    ks = [r["k"] for r in rows]
    bs = [r["b"] for r in rows]
    checks = [
        TrendCheck("k_pairwise_within_0.05", max(ks) - min(ks) < 0.05,
                   _seq_detail([r["label"] for r in rows], ks)),
        TrendCheck("b_pairwise_within_0.05", max(bs) - min(bs) < 0.05,
                   _seq_detail([r["label"] for r in rows], bs)),
    ]
    return FigureResult("fig12", ("label", "n", "N", "init_sites", "k", "b", "r2"),
                        rows, checks, traces)


def fig13(overrides=None) -> FigureResult:
    """Saturation-law fits of S_f for the three large systems."""
    base = _base(overrides).with_overrides(enable_w=False)
    systems = [
        ("chain16_N4", base.with_overrides(shape="chain", n=16, n_particles=4,
                                           initial_sites=(0, 1, 2, 3))),
        ("chain18_N6", base.with_overrides(shape="chain", n=18, n_particles=6,
                                           initial_sites=(0, 1, 2, 3, 4, 5))),
        ("grid4x4_N4", base.with_overrides(shape="grid", rows=4, cols=4,
                                           n_particles=4,
                                           initial_sites=(0, 1, 2, 3))),
    ]
    rows, traces = [], {}
    for label, cfg in systems:
        trace = runner.run_trace(cfg, enable_w=False)
        fit = analysis.fit_saturation(trace, "s_f")
        traces[label] = trace
        rows.append({"system": label, "dim": len(trace.s_f), "A": fit.A,
                     "omega": fit.omega, "r2": fit.r2})
    r2s = {r["system"]: r["r2"] for r in rows}
    checks = [TrendCheck(f"r2_{label}_above_0.9", r2 > 0.9, f"r2={r2:.6f}")
              for label, r2 in r2s.items()]
    return FigureResult("fig13", ("system", "dim", "A", "omega", "r2"),
                        rows, checks, traces)


def fig14(overrides=None, workers: int = 1) -> FigureResult:
    """Regression period against chain length, n = 3..8 at N = 1."""
    base = _base(overrides).with_overrides(enable_w=False)
    configs = _chain_family(range(3, 9), base)
    rows = []
    for cfg, period in zip(configs, _scan_periods(configs, workers)):
        rows.append({"n": cfg.n, "found": period.found,
                     "T": period.T if period.found else "",
                     "armed_at": period.armed_at})
    all_found = all(r["found"] for r in rows)
    ts = [r["T"] for r in rows if r["found"]]
    checks = [
        TrendCheck("all_periods_found", all_found,
                   _seq_detail([r["n"] for r in rows],
                               [r["T"] if r["found"] else np.nan for r in rows])),
        TrendCheck("T_strictly_increasing_in_n",
                   all_found and _strict(ts, "up"),
                   _seq_detail([r["n"] for r in rows],
                               [r["T"] if r["found"] else np.nan for r in rows])),
    ]
    return FigureResult("fig14", ("n", "T", "found", "armed_at"), rows, checks)


def fig11(overrides=None, workers: int = 1) -> FigureResult:
    """Regression period against lattice connectivity at 16 sites.

    The particle number is a free parameter (the study never states it);
    the default N = 1 is the measured regime where all three shapes return
    within a tractable horizon.
    """
    base = _base(overrides).with_overrides(enable_w=False)
    if base.horizon < 1e6:
        base = base.with_overrides(horizon=1e6)  # the 16-chain returns near 3e5
    N = base.n_particles
    labels_configs = [
        ("chain", base.with_overrides(shape="chain", n=16)),
        ("ring", base.with_overrides(shape="ring", n=16)),
        ("grid", base.with_overrides(shape="grid", rows=4, cols=4)),
    ]
    configs = [cfg.with_overrides(n_particles=N,
                                  initial_sites=tuple(range(N)))
               for _, cfg in labels_configs]
    rows = {}
    for (label, _), cfg, period in zip(labels_configs, configs,
                                       _scan_periods(configs, workers)):
        graph = runner.build_graph(cfg)
        rows[label] = {"shape": label, "edges": len(graph.edges),
                       "found": period.found,
                       "T": period.T if period.found else ""}
    ordered = all(r["found"] for r in rows.values()) and \
        rows["grid"]["T"] < rows["ring"]["T"] < rows["chain"]["T"]
    checks = [
        TrendCheck("period_decreases_with_connectivity", bool(ordered),
                   ", ".join(f"{lab}(E={r['edges']}): T={r['T']}"
                             for lab, r in rows.items())),
    ]
    return FigureResult("fig11", ("shape", "edges", "T", "found"),
                        list(rows.values()), checks)


_RUNNERS = {fid: globals()[fid] for fid in FIGURE_IDS}


def _format_rows_csv(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        out = []
        for col in columns:
            val = row.get(col, "")
            out.append(repr(float(val)) if isinstance(val, float) else str(val))
        lines.append(",".join(out))
    return "\n".join(lines) + "\n"


def format_report(result: FigureResult) -> str:
    lines = [f"figure {result.figure_id}: "
             f"{'PASS' if result.passed else 'FAIL'}"]
    for c in result.checks:
        lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    return "\n".join(lines) + "\n"


def run_figure(figure_id: str, out_dir: str | None = None,
               overrides: dict | None = None, workers: int = 1) -> FigureResult:
    """Execute a canned family, write its outputs, and enforce its trends."""
    if figure_id not in _RUNNERS:
        raise ValidationError(
            f"unknown figure id {figure_id!r}; expected one of "
            f"{', '.join(FIGURE_IDS)}")
    if figure_id in ("fig11", "fig14"):
        result = _RUNNERS[figure_id](overrides, workers=workers)
    else:
        result = _RUNNERS[figure_id](overrides)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        atomic_write(os.path.join(out_dir, f"{figure_id}_data.csv"),
                     _format_rows_csv(result.columns, result.rows))
        atomic_write(os.path.join(out_dir, f"{figure_id}_report.txt"),
                     format_report(result))
        for label, trace in result.traces.items():
            atomic_write(os.path.join(out_dir, f"{figure_id}_{label}_trace.csv"),
                         format_trace(trace))
        atomic_write_json(
            os.path.join(out_dir, f"{figure_id}_run.json"),
            {"figure": figure_id,
             "checks": [{"name": c.name, "passed": c.passed,
                         "detail": c.detail} for c in result.checks],
             "overrides": {k: str(v) for k, v in (overrides or {}).items()}})
    if not result.passed:
        failed = ", ".join(c.name for c in result.checks if not c.passed)
        raise TrendError(f"{figure_id}: trend assertion(s) failed: {failed}")
    return result
