"""Acceptance criteria, one test per criterion (sub-lettered where a
criterion bundles independently checkable claims). Each test prints a
PASS/FAIL line with the measured values before asserting, so the report is
visible either way.

Three sub-checks are expected RED at the library defaults; the measured
analysis lives in the repo-external decisions ledger:
  1b  level-1 window leakage reaches 0.111 at the default window (critical
      phase-space density; ~1/W tail decay), far above 1e-3;
  5b  the linear-law slope k rises with particle number in every frame and
      method measured, it does not fall;
  8a/8c  the n = 7 chain revives at t = 57.6 (< T(6) = 74.1) and the
      (n=5, N=2) system revives at t = 21.7 on every entropy column, so
      strict T monotonicity and the N = 2 not-found outcome are
      unattainable at U = 0 with epsilon = 0.2 and dt = 0.1.
"""

import numpy as np
import pytest

import hcboson.entropy as ent
from hcboson import analysis, dynamics as dyn, figures, fock, lattice, runner
from hcboson import wannier as wn
from hcboson.config import RunConfig
from hcboson.errors import TrendError

pytestmark = pytest.mark.acceptance

M9 = dict(wx=1, wk=1, leak_tol=0.3)


def report(cid: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="module")
def frame25():
    return wn.build_frame(leak_tol=0.15)


@pytest.fixture(scope="module")
def frame9():
    return wn.build_frame(**M9)


def evolved_state(n, N, sites, t, J=1.0, U=0.0, shape="chain"):
    graph = {"chain": lattice.build_chain,
             "ring": lattice.build_ring}[shape](n)
    basis = fock.enumerate_basis(n, N)
    H = fock.build_hamiltonian(graph, basis, J, U)
    prop = dyn.make_propagator(H)
    return dyn.evolve(prop, dyn.basis_state(basis, sites), t)


class TestCriterion1:
    def test_1a_gram_identity(self, frame25):
        grid = frame25.grid
        w = np.full(grid.x.size, grid.dx)
        w[0] = w[-1] = grid.dx / 2
        gram = (np.conj(frame25.functions) * w) @ frame25.functions.T
        defect = float(np.max(np.abs(gram - np.eye(frame25.n_cells))))
        assert report("1a", defect < 1e-8, f"Gram defect {defect:.3e} < 1e-8")

    def test_1b_level_leakage(self, frame25):
        leak = frame25.leakage
        ok = bool(np.all(leak < 1e-3))
        report("1b", ok, f"leakage m=0: {leak[0]:.3e}, m=1: {leak[1]:.3e} "
                         f"(required < 1e-3; m=1 unattainable at critical "
                         f"cell density, see ledger)")
        assert ok

    def test_1c_commutator_zero(self, frame25):
        md = wn.macro_spreads(frame25)
        comm = md.Q_matrix @ md.P_matrix - md.P_matrix @ md.Q_matrix
        ok = bool(np.all(comm == 0.0))
        assert report("1c", ok, "[Q, P] identically zero")

    def test_1d_cell_centering(self, frame25):
        md = wn.macro_spreads(frame25)
        grid = frame25.grid
        err = float(np.max(np.abs(md.q_means -
                                  frame25.cell_index[:, 0] * grid.x0)))
        assert report("1d", err < 0.1 * grid.x0,
                      f"max |<q> - jx*x0| = {err:.4f} < {0.1 * grid.x0:.4f}")


class TestCriterion2:
    def test_dynamics_oracle(self):
        basis = fock.enumerate_basis(2, 1)
        H = fock.build_hamiltonian(lattice.build_chain(2), basis, 1.0, 0.0)
        prop = dyn.make_propagator(H)
        psi0 = dyn.basis_state(basis, [0])

        def energy(state):
            return float(np.real(np.vdot(state.amplitudes,
                                         H.apply(state.amplitudes))))

        traj = dyn.sample_trajectory(prop, psi0, 0.1, 200, {
            "p0": lambda s: float(np.abs(s.amplitudes[0]) ** 2),
            "norm": lambda s: s.norm,
            "E": energy,
        })
        p_err = float(np.max(np.abs(traj.series["p0"] -
                                    np.cos(traj.times) ** 2)))
        norm_err = float(np.max(np.abs(traj.series["norm"] - 1.0)))
        e_err = float(np.max(np.abs(traj.series["E"] - traj.series["E"][0])))
        back = dyn.evolve(prop, dyn.evolve(prop, psi0, 20.0), -20.0)
        rev_err = float(np.max(np.abs(back.amplitudes - psi0.amplitudes)))
        ok = p_err < 1e-9 and rev_err < 1e-8 and norm_err < 1e-10 \
            and e_err < 1e-8
        assert report("2", ok,
                      f"max|p0 - cos^2| = {p_err:.2e} < 1e-9, reversal "
                      f"{rev_err:.2e} < 1e-8, norm {norm_err:.2e} < 1e-10, "
                      f"energy {e_err:.2e} < 1e-8")


class TestCriterion3:
    CASES_M25 = [(2, 1, [0], 4.1), (3, 1, [0], 7.7), (3, 2, [0, 2], 11.3)]
    CASES_M9 = [(4, 2, [0, 1], 9.2), (5, 2, [0, 3], 13.1),
                (6, 3, [0, 1, 2], 17.9)]

    def _check(self, frame, cases, label):
        worst_gap, worst_bound = 0.0, 0.0
        for n, N, sites, t in cases:
            state = evolved_state(n, N, sites, t)
            for method in ("factorized", "exact"):
                fn = (ent.w_entropy_factorized if method == "factorized"
                      else ent.w_entropy_exact)
                full = fn(state, frame, theta=0.0, backend="reference")
                pruned = fn(state, frame, theta=1e-14)
                gap = abs(full.entropy - pruned.entropy)
                # 1e-11 allowance for summation-order rounding between the
                # two routes; the reported bound covers pruning loss only
                assert gap <= pruned.error_bound + 1e-11, \
                    (label, n, N, method, gap, pruned.error_bound)
                assert pruned.error_bound < 1e-8, \
                    (label, n, N, method, pruned.error_bound)
                worst_gap = max(worst_gap, gap)
                worst_bound = max(worst_bound, pruned.error_bound)
        return worst_gap, worst_bound

    def test_brute_force_equivalence(self, frame25, frame9):
        g25, b25 = self._check(frame25, self.CASES_M25, "M=25")
        g9, b9 = self._check(frame9, self.CASES_M9, "M=9")
        assert report(
            "3", True,
            f"pruned-vs-enumerated gap <= bound for n<=3 @ M=25 "
            f"(worst gap {g25:.2e}, bound {b25:.2e}) and n<=6 @ M=9 "
            f"(worst gap {g9:.2e}, bound {b9:.2e}); bounds < 1e-8")


class TestCriterion4:
    def test_fock_state_additivity(self, frame25, frame9):
        worst = 0.0
        checked = 0
        for n in range(2, 7):
            frame = frame25 if n <= 4 else frame9
            h0 = ent.shannon(frame.level_cell_mass[0])
            h1 = ent.shannon(frame.level_cell_mass[1])
            for N in range(0, n + 1):
                basis = fock.enumerate_basis(n, N)
                closed = N * h1 + (n - N) * h0
                vals = []
                for mask in basis.states:
                    sites = [i for i in range(n) if (int(mask) >> i) & 1]
                    res = ent.w_entropy_factorized(
                        dyn.basis_state(basis, sites), frame, theta=0.0)
                    vals.append(res.entropy)
                    worst = max(worst, abs(res.entropy - closed))
                    checked += 1
                mean_gap = abs(float(np.mean(vals)) -
                               ent.mean_fock_w_entropy(basis, frame))
                worst = max(worst, mean_gap)
        ok = worst < 1e-10
        assert report("4", ok,
                      f"{checked} basis states over n=2..6: worst "
                      f"|S - (N*H1 + (n-N)*H0)| and mean gap = {worst:.2e} "
                      f"< 1e-10")


def _linear_family(configs):
    fits = []
    for cfg in configs:
        trace = runner.run_trace(cfg)
        fits.append(analysis.fit_linear(trace))
    return fits


class TestCriterion5:
    @pytest.fixture(scope="class")
    @staticmethod
    def family_fits():
        base = RunConfig(**M9)
        out = {}
        out["n"] = _linear_family(
            [base.with_overrides(n=n, initial_sites=(0,))
             for n in (3, 4, 5, 6)])
        out["N"] = _linear_family(
            [base.with_overrides(n=5, n_particles=N,
                                 initial_sites=tuple(range(N)))
             for N in (1, 2, 3, 4)])
        out["pos"] = _linear_family(
            [base.with_overrides(n=5, initial_sites=(p,)) for p in (0, 1, 2)])
        return out

    def test_5a_scale_family(self, family_fits):
        fits = family_fits["n"]
        ks = [f.k for f in fits]
        bs = [f.b for f in fits]
        r2s = [f.r2 for f in fits]
        ok = all(r > 0.9 for r in r2s) and \
            bool(np.all(np.diff(ks) < 0)) and \
            bool(np.all(np.diff(bs) > 0)) and all(b > 0 for b in bs)
        assert report("5a", ok,
                      f"n=3..6: r2={['%.4f' % r for r in r2s]}, "
                      f"k={['%.4f' % k for k in ks]} strictly down, "
                      f"b={['%.4f' % b for b in bs]} strictly up, b>0")

    def test_5b_particle_family_b(self, family_fits):
        bs = [f.b for f in family_fits["N"]]
        ok = bool(np.all(np.diff(bs) > 0))
        assert report("5b-b", ok,
                      f"N=1..4: b={['%.4f' % b for b in bs]} strictly up")

    def test_5b_particle_family_k(self, family_fits):
        ks = [f.k for f in family_fits["N"]]
        ok = bool(np.all(np.diff(ks) < 0))
        report("5b-k", ok,
               f"N=1..4: k={['%.4f' % k for k in ks]} (required strictly "
               f"decreasing; measured increasing in every frame/method, "
               f"see ledger)")
        assert ok

    def test_5c_position_family(self, family_fits):
        fits = family_fits["pos"]
        ks = [f.k for f in fits]
        bs = [f.b for f in fits]
        dk = max(ks) - min(ks)
        db = max(bs) - min(bs)
        ok = dk < 0.05 and db < 0.05
        assert report("5c", ok,
                      f"positions 0/1/2: |dk| = {dk:.4f} < 0.05, "
                      f"|db| = {db:.4f} < 0.05")


class TestCriterion6:
    def test_particle_hole_traces(self):
        base = RunConfig(dt=0.2, t_max=20.0, leak_tol=0.15)
        cfg1 = base.with_overrides(n=5, n_particles=1, initial_sites=(0,))
        cfg4 = base.with_overrides(n=5, n_particles=4,
                                   initial_sites=(1, 2, 3, 4))
        tr1 = runner.run_trace(cfg1)
        tr4 = runner.run_trace(cfg4)
        f_gap = float(np.max(np.abs(tr1.s_f - tr4.s_f)))
        w_gap = float(np.max(np.abs(tr1.s_w - tr4.s_w)))
        ok = f_gap < 1e-9 and w_gap > 0.01
        assert report("6", ok,
                      f"S_f pointwise gap {f_gap:.2e} < 1e-9; S_w max gap "
                      f"{w_gap:.3f} > 0.01 nats")


class TestCriterion7:
    def test_saturation_fits(self):
        t = np.arange(0, 40.0001, 0.1)
        synth = analysis.fit_saturation_xy(t, 2.0 * (1 - np.exp(-0.5 * t)))
        synth_ok = abs(synth.A - 2.0) < 1e-6 and \
            abs(synth.omega - 0.5) < 1e-6 and abs(synth.r2 - 1.0) < 1e-12
        base = RunConfig(enable_w=False)
        tr16 = runner.run_trace(base.with_overrides(
            n=16, n_particles=4, initial_sites=(0, 1, 2, 3)), enable_w=False)
        tr6 = runner.run_trace(base.with_overrides(
            n=6, n_particles=1, initial_sites=(0,)), enable_w=False)
        f16 = analysis.fit_saturation(tr16, "s_f")
        f6 = analysis.fit_saturation(tr6, "s_f")
        ok = synth_ok and f16.r2 > f6.r2 and f16.r2 > 0.9
        assert report("7", ok,
                      f"synthetic recovery to 1e-6 (r2={synth.r2!r}); "
                      f"r2(n=16,N=4)={f16.r2:.4f} > 0.9 and > "
                      f"r2(n=6,N=1)={f6.r2:.4f}")


class TestCriterion8:
    def test_8a_period_monotone_in_n(self):
        base = RunConfig(enable_w=False)
        rows = []
        for n in range(3, 9):
            cfg = base.with_overrides(n=n, initial_sites=(0,))
            res = runner.find_period(cfg, column="s_f", eps=0.2, horizon=2e4)
            rows.append((n, res.T if res.found else None))
        ts = [T for _, T in rows]
        ok = all(T is not None for T in ts) and \
            bool(np.all(np.diff([T for T in ts]) > 0))
        report("8a", ok,
               f"T(n) = {rows} (required strictly increasing; the n=7 chain "
               f"genuinely revives at t=57.6 < T(6)=74.1, see ledger)")
        assert ok

    def test_8b_two_site_oracle(self):
        eps, dt = 0.2, 0.1
        lo, hi = 1e-12, 0.5
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            h = -mid * np.log(mid) - (1 - mid) * np.log(1 - mid)
            lo, hi = (lo, mid) if h >= eps else (mid, hi)
        t_star = float(np.arccos(np.sqrt(0.5 * (lo + hi))))
        cfg = RunConfig(n=2, enable_w=False, dt=dt)
        res = runner.find_period(cfg, column="s_f", eps=eps, horizon=10.0)
        ok = res.found and abs(res.T - t_star) <= dt
        assert report("8b", ok,
                      f"detected T = {res.T} vs analytic first epsilon "
                      f"return {t_star:.4f} (within dt = {dt})")

    def test_8c_n5_N2_not_found(self):
        cfg = RunConfig(n=5, n_particles=2, initial_sites=(0, 1),
                        enable_w=False)
        res = runner.find_period(cfg, column="s_f", eps=0.2, horizon=1e4)
        ok = not res.found
        report("8c", ok,
               f"n=5, N=2 at U=0: found={res.found}, T={res.T} (required "
               f"not-found at horizon 1e4; the free-hopping sector revives "
               f"early at every initial pair; U > 0 restores the expected "
               f"outcome, see ledger)")
        assert ok


class TestCriterion9:
    def test_shape_period_ordering(self):
        base = RunConfig(enable_w=False, horizon=1e6)
        systems = {
            "chain": base.with_overrides(shape="chain", n=16,
                                         initial_sites=(0,)),
            "ring": base.with_overrides(shape="ring", n=16,
                                        initial_sites=(0,)),
            "grid": base.with_overrides(shape="grid", rows=4, cols=4,
                                        initial_sites=(0,)),
        }
        T = {}
        for label, cfg in systems.items():
            res = runner.find_period(cfg, column="s_f", eps=0.2,
                                     horizon=cfg.horizon)
            T[label] = res.T if res.found else None
        ok = all(v is not None for v in T.values()) and \
            T["grid"] < T["ring"] < T["chain"]
        assert report("9", ok,
                      f"T(grid)={T['grid']} < T(ring)={T['ring']} < "
                      f"T(chain)={T['chain']} at 16 sites, N=1")


class TestCriterion10:
    def test_fit_stationarity_and_gradient(self):
        rng = np.random.default_rng(42)
        t = np.arange(0, 50.0001, 0.1)
        s = 3.0 * (1 - np.exp(-0.3 * t)) + 0.02 * rng.normal(size=t.size)
        fit = analysis.fit_saturation_xy(t, s)
        grad = analysis.saturation_gradient(t, s, fit.A, fit.omega)
        stationary = float(np.max(np.abs(grad)))

        def sse(a, w):
            return float(np.sum((s - a * (1 - np.exp(-w * t))) ** 2))

        h = 1e-6
        off = (fit.A * 0.9, fit.omega * 1.1)  # a nonzero-gradient point
        g_off = analysis.saturation_gradient(t, s, *off)
        fd = np.array([
            (sse(off[0] + h, off[1]) - sse(off[0] - h, off[1])) / (2 * h),
            (sse(off[0], off[1] + h) - sse(off[0], off[1] - h)) / (2 * h),
        ])
        rel = float(np.max(np.abs(2.0 * g_off - fd) / np.abs(fd)))
        ok = stationary < 1e-8 and rel < 1e-5
        assert report("10", ok,
                      f"|J^T r| at convergence = {stationary:.2e} < 1e-8; "
                      f"FD agreement (step 1e-6) rel err {rel:.2e} < 1e-5")


class TestCriterion11:
    def test_figure_determinism(self, tmp_path):
        payloads = []
        for run, workers in (("a", 1), ("b", 2), ("c", 1)):
            out = tmp_path / run
            try:
                figures.run_figure("fig14", out_dir=str(out), workers=workers)
            except TrendError:
                pass  # fig14's trend defect is criterion 8a's finding
            payloads.append(open(out / "fig14_data.csv", "rb").read())
        ok = payloads[0] == payloads[1] == payloads[2]
        assert report("11", ok,
                      f"fig14 CSV byte-identical across repeated runs and "
                      f"worker counts 1/2 ({len(payloads[0])} bytes)")
