import pytest

from hcboson import analysis, entropy, runner
from hcboson.config import RunConfig
from hcboson.errors import HcbError

FAST = dict(wx=1, wk=1, leak_tol=0.3, n=4, t_max=8.0)


class TestRunTrace:
    def test_trace_has_w_columns_and_metadata(self):
        cfg = RunConfig(**FAST)
        tr = runner.run_trace(cfg)
        assert tr.has_w
        assert len(tr.times) == cfg.n_steps() + 1
        for key in ("n", "N", "shape", "J", "U", "frame", "window", "theta",
                    "leakage0", "leakage1"):
            assert key in tr.metadata
        assert tr.metadata["window"] == "1x1"
        assert tr.metadata["shape"] == "chain"

    def test_w_disabled_trace(self):
        cfg = RunConfig(**FAST, enable_w=False)
        tr = runner.run_trace(cfg)
        assert not tr.has_w
        assert tr.metadata["frame"] == "none"

    def test_s_f_starts_at_zero_for_basis_state(self):
        tr = runner.run_trace(RunConfig(**FAST))
        assert tr.s_f[0] == pytest.approx(0.0, abs=1e-12)
        assert tr.s_w[0] == pytest.approx(
            entropy.fock_w_entropy(runner.frame_for(RunConfig(**FAST)), 4, 1),
            abs=1e-10)

    def test_frame_cache_reuses_instance(self):
        cfg = RunConfig(**FAST)
        assert runner.frame_for(cfg) is runner.frame_for(cfg)

    def test_stage_prefix_on_errors(self):
        cfg = RunConfig(**FAST, cost_budget=2)
        with pytest.raises(HcbError, match="^entropy: "):
            runner.run_trace(cfg)
        bad = RunConfig(**dict(FAST, n=4), shape="custom",
                        edges=((0, 1), (2, 3)))
        with pytest.raises(HcbError, match="^lattice: "):
            runner.run_trace(bad)

    def test_ring_and_grid_and_custom_shapes(self):
        ring = RunConfig(**dict(FAST, n=4), shape="ring")
        assert runner.run_trace(ring, enable_w=False).metadata["shape"] == "ring"
        grid = RunConfig(shape="grid", rows=2, cols=2, t_max=5.0,
                         enable_w=False)
        assert runner.run_trace(grid).metadata["shape"] == "grid(2,2)"
        cust = RunConfig(shape="custom", n=3, edges=((0, 1), (1, 2)),
                         t_max=5.0, enable_w=False)
        assert runner.run_trace(cust).metadata["shape"] == "custom"


class TestFindPeriod:
    def test_matches_batch_detector(self):
        cfg = RunConfig(n=4, enable_w=False, t_max=100.0)
        tr = runner.run_trace(cfg, enable_w=False)
        batch = analysis.detect_period(tr, "s_f", 0.2)
        inc = runner.find_period(cfg, "s_f", 0.2, horizon=100.0)
        assert inc.found == batch.found
        assert inc.T == pytest.approx(batch.T, abs=1e-12)
        assert inc.armed_at == pytest.approx(batch.armed_at, abs=1e-12)

    def test_krylov_path_matches_spectral(self):
        base = dict(n=5, enable_w=False, dt=0.1)
        spec = runner.find_period(RunConfig(**base, propagator="spectral"),
                                  horizon=60.0)
        kry = runner.find_period(RunConfig(**base, propagator="krylov"),
                                 horizon=60.0)
        assert spec.found and kry.found
        assert kry.T == pytest.approx(spec.T, abs=1e-9)

    def test_w_column_period(self):
        cfg = RunConfig(**FAST)
        res = runner.find_period(cfg, column="s_w", eps=0.2, horizon=30.0)
        assert res.applicable

    def test_unknown_column(self):
        with pytest.raises(HcbError):
            runner.find_period(RunConfig(**FAST), column="energy",
                               horizon=5.0)

    def test_not_applicable_when_frozen(self):
        # full band cannot move: S_f stays 0, the scan never arms
        cfg = RunConfig(n=2, n_particles=2, initial_sites=(0, 1),
                        enable_w=False, t_max=5.0)
        res = runner.find_period(cfg, horizon=5.0)
        assert not res.found and not res.applicable


class TestAnalyzeTrace:
    def test_summary_blocks(self):
        cfg = RunConfig(**dict(FAST, t_max=30.0))
        tr = runner.run_trace(cfg)
        rep = runner.analyze_trace(tr, "s_f", 0.2)
        assert set(rep) == {"linear", "saturation", "period"}
        assert "k" in rep["linear"]
        assert rep["period"]["eps"] == 0.2


class TestSidecar:
    def test_payload_contains_config_and_version(self):
        payload = runner.sidecar_payload(RunConfig(**FAST), {"x": "y"})
        assert payload["config"]["lattice"]["shape"] == "chain"
        assert payload["outputs"] == {"x": "y"}
        assert "version" in payload
