"""End-to-end execution of one run: lattice -> basis -> Hamiltonian ->
propagator -> frame -> sampled entropy trace.

Errors from each stage are re-raised with a module-qualified prefix so the
CLI can report where a run failed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analysis, entropy, fock, lattice, wannier
from . import dynamics as dyn
from .config import RunConfig, config_to_mapping
from .errors import HcbError, ValidationError
from .trace import EntropyTrace

_FRAME_CACHE: dict[tuple, wannier.WannierFrame] = {}


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, HcbError) \
                    and not getattr(exc, "_staged", False):
                exc.args = (f"{name}: {exc}",)
                exc._staged = True
            return False
    return _Ctx()


def build_graph(cfg: RunConfig) -> lattice.LatticeGraph:
    with _stage("lattice"):
        if cfg.shape == "chain":
            return lattice.build_chain(cfg.n)
        if cfg.shape == "ring":
            return lattice.build_ring(cfg.n)
        if cfg.shape == "grid":
            return lattice.build_grid(cfg.rows, cfg.cols)
        return lattice.build_custom(cfg.n, cfg.edges)


def frame_for(cfg: RunConfig) -> wannier.WannierFrame:
    """Build (or reuse) the Wannier frame for a config's geometry."""
    key = (cfg.x0, cfg.k0, cfg.zeta, cfg.wx, cfg.wk, cfg.grid_dx, cfg.extent,
           cfg.oscillator_length, cfg.leak_tol)
    if key not in _FRAME_CACHE:
        with _stage("wannier"):
            grid = wannier.make_phase_grid(
                x0=cfg.x0, k0=cfg.k0, zeta=cfg.zeta, wx=cfg.wx, wk=cfg.wk,
                dx=cfg.grid_dx, extent=cfg.extent)
            _FRAME_CACHE[key] = wannier.build_frame(
                grid, oscillator_length=cfg.oscillator_length,
                leak_tol=cfg.leak_tol)
    return _FRAME_CACHE[key]


@dataclass(frozen=True)
class SystemBundle:
    graph: lattice.LatticeGraph
    basis: fock.FockBasis
    hamiltonian: fock.SparseHamiltonian
    propagator: dyn.Propagator
    psi0: dyn.QuantumState


def build_system(cfg: RunConfig) -> SystemBundle:
    graph = build_graph(cfg)
    with _stage("fock"):
        basis = fock.enumerate_basis(graph.n_sites, cfg.n_particles)
        H = fock.build_hamiltonian(graph, basis, cfg.J, cfg.U)
    with _stage("dynamics"):
        prop = dyn.make_propagator(H, cfg.propagator)
        psi0 = dyn.basis_state(basis, cfg.initial_sites)
    return SystemBundle(graph, basis, H, prop, psi0)


def run_trace(cfg: RunConfig, t_max: float | None = None,
              enable_w: bool | None = None) -> EntropyTrace:
    """Sample S_f (and S_w when enabled) on the configured time grid."""
    cfg.validate()
    horizon = cfg.t_max if t_max is None else t_max
    with_w = cfg.enable_w if enable_w is None else enable_w
    bundle = build_system(cfg)
    observers = {"s_f": entropy.f_entropy}
    frame = None
    if with_w:
        frame = frame_for(cfg)
        with _stage("entropy"):
            evaluator = entropy.WEntropyEvaluator(
                bundle.basis, frame, cfg.method, cfg.theta,
                None if cfg.backend == "auto" else cfg.backend,
                cfg.cost_budget)

        def w_obs(state, _ev=evaluator):
            res = _ev(state)
            return np.array([res.entropy, res.dropped_mass, res.error_bound])

        observers["w"] = w_obs
    n_steps = int(round(horizon / cfg.dt))
    with _stage("dynamics"):
        traj = dyn.sample_trajectory(bundle.propagator, bundle.psi0, cfg.dt,
                                     n_steps, observers)
    meta = {
        "n": bundle.graph.n_sites,
        "N": cfg.n_particles,
        "shape": bundle.graph.shape_tag,
        "J": repr(cfg.J),
        "U": repr(cfg.U),
        "frame": frame.frame_hash if frame is not None else "none",
        "window": f"{cfg.wx}x{cfg.wk}" if frame is not None else "none",
        "theta": repr(cfg.theta) if frame is not None else "none",
        "init_sites": ";".join(str(s) for s in cfg.initial_sites),
        "method": cfg.method if frame is not None else "none",
    }
    if frame is not None:
        meta["leakage0"] = repr(float(frame.leakage[0]))
        meta["leakage1"] = repr(float(frame.leakage[1]))
    if with_w:
        w_block = traj.series["w"]
        return EntropyTrace(traj.times, traj.series["s_f"], w_block[:, 0],
                            w_block[:, 1], w_block[:, 2], meta)
    return EntropyTrace(traj.times, traj.series["s_f"], None, None, None, meta)


def find_period(cfg: RunConfig, column: str = "s_f", eps: float = 0.2,
                horizon: float = 2e4, chunk: int = 8192) -> analysis.PeriodResult:
    """Early-exit regression-period scan on a freshly evolved trajectory.

    Spectral propagators evaluate sample blocks directly (no error
    accumulation); krylov steps sequentially. The scan stops at the first
    epsilon return, so only ~T/dt samples are ever computed.
    """
    cfg.validate()
    bundle = build_system(cfg)
    if column == "s_w":
        frame = frame_for(cfg)
        with _stage("entropy"):
            evaluator = entropy.WEntropyEvaluator(
                bundle.basis, frame, cfg.method, cfg.theta,
                None if cfg.backend == "auto" else cfg.backend,
                cfg.cost_budget)

        def value(state):
            return evaluator(state).entropy
    elif column == "s_f":
        def value(state):
            return entropy.f_entropy(state)
    else:
        raise ValidationError(f"unknown period column {column!r}")

    detector = analysis.IncrementalPeriodDetector(eps)
    n_steps = int(round(horizon / cfg.dt))
    prop = bundle.propagator
    with _stage("dynamics"):
        if prop.mode == "spectral":
            coeff = prop.eigenvectors.T @ bundle.psi0.amplitudes
            for start in range(0, n_steps + 1, chunk):
                ts = (start + np.arange(min(chunk, n_steps + 1 - start))) * cfg.dt
                phases = np.exp(-1j * np.outer(prop.eigenvalues, ts))
                block = prop.eigenvectors @ (phases * coeff[:, None])
                for i in range(len(ts)):
                    if column == "s_f":
                        # same shannon kernel as the trace observer, minus
                        # the per-sample state wrapper (long scans)
                        s = entropy.shannon(np.abs(block[:, i]) ** 2)
                    else:
                        s = value(dyn.QuantumState(bundle.basis, block[:, i]))
                    hit = detector.update(float(ts[i]), s)
                    if hit is not None:
                        return hit
        else:
            psi = bundle.psi0
            hit = detector.update(0.0, value(psi))
            for k in range(1, n_steps + 1):
                psi = dyn.evolve(prop, psi, cfg.dt)
                hit = detector.update(k * cfg.dt, value(psi))
                if hit is not None:
                    return hit
    return detector.finalize(n_steps * cfg.dt)


def sidecar_payload(cfg: RunConfig, outputs: dict | None = None) -> dict:
    from . import __version__
    payload = {"config": config_to_mapping(cfg), "version": __version__}
    if outputs:
        payload["outputs"] = outputs
    return payload


def analyze_trace(trace: EntropyTrace, column: str = "s_f",
                  eps: float = 0.2, sat_column: str = "s_f") -> dict:
    """LinearFit / SaturationFit / PeriodResult summary for one trace.

    ``column`` drives the period scan; the saturation law is fitted on
    ``sat_column`` (default s_f: the model has no intercept, while s_w
    starts at the sector's Fock-state entropy).
    """
    out: dict = {}
    if trace.has_w:
        try:
            lin = analysis.fit_linear(trace)
            out["linear"] = {"k": lin.k, "b": lin.b, "r2": lin.r2,
                             "n_samples": lin.n_samples}
        except HcbError as exc:
            out["linear"] = {"error": str(exc)}
    try:
        sat = analysis.fit_saturation(trace, sat_column)
        out["saturation"] = {"A": sat.A, "omega": sat.omega, "r2": sat.r2,
                             "residual_norm": sat.residual_norm,
                             "column": sat_column}
    except HcbError as exc:
        out["saturation"] = {"error": str(exc)}
    period = analysis.detect_period(trace, column, eps)
    out["period"] = {"found": period.found, "T": period.T,
                     "epsilon_at_T": period.epsilon_at_T,
                     "armed_at": period.armed_at,
                     "search_horizon": period.search_horizon,
                     "applicable": period.applicable, "column": column,
                     "eps": eps}
    return out
