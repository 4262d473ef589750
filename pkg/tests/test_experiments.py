import math
from dataclasses import replace

import numpy as np
import pytest

from vibrochain import experiments as xp


@pytest.fixture(scope="module")
def small_cfg(fig1_cfg):
    # moderate damping, short horizons: cheap but non-trivial dynamics
    return replace(fig1_cfg, gamma=1100.0)


SMALL_GRID = xp.Beta0Grid(0.0, 1.5, 7)


class TestDisorderSpec:
    def test_target_validated(self):
        with pytest.raises(ValueError, match="target"):
            xp.DisorderSpec("sites", np.zeros(6), 0.1, 5, 1)

    def test_counts_validated(self):
        with pytest.raises(ValueError, match="n_realizations"):
            xp.DisorderSpec("frequencies", np.zeros(6), 0.1, 0, 1)
        with pytest.raises(ValueError, match="std"):
            xp.DisorderSpec("frequencies", np.zeros(6), -0.1, 5, 1)
        with pytest.raises(ValueError, match="master_seed"):
            xp.DisorderSpec("frequencies", np.zeros(6), 0.1, 5, -3)

    def test_draws_deterministic_and_distinct(self):
        spec = xp.DisorderSpec("frequencies", np.zeros(6), 0.1, 10, 99)
        a = xp.realization_values(spec, 3)
        b = xp.realization_values(spec, 3)
        c = xp.realization_values(spec, 4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_zero_std_returns_means_exactly(self, small_cfg):
        spec = xp.DisorderSpec("couplings", small_cfg.g, 0.0, 3, 5)
        values = xp.realization_values(spec, 0)
        assert np.array_equal(values, small_cfg.g)

    def test_realization_config_targets(self, small_cfg):
        spec_w = xp.DisorderSpec("frequencies", small_cfg.omega, 0.1, 3, 5)
        cfg_w = xp.realization_config(small_cfg, spec_w, 0)
        assert not np.array_equal(cfg_w.omega, small_cfg.omega)
        assert np.array_equal(cfg_w.g, small_cfg.g)
        spec_g = xp.DisorderSpec("couplings", small_cfg.g, 0.1, 3, 5)
        cfg_g = xp.realization_config(small_cfg, spec_g, 0)
        assert not np.array_equal(cfg_g.g, small_cfg.g)
        assert np.array_equal(cfg_g.omega, small_cfg.omega)

    def test_negative_draws_kept(self):
        # large std forces negative values; the dynamics accepts them
        spec = xp.DisorderSpec("couplings", np.zeros(6), 5.0, 50, 7)
        draws = np.array([xp.realization_values(spec, r) for r in range(50)])
        assert (draws < 0).any()


class TestSweep:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            xp.Beta0Grid(0.0, 3.0, 1)
        with pytest.raises(ValueError):
            xp.Beta0Grid(2.0, 1.0, 5)

    def test_decoupled_curve_is_flat(self, small_cfg):
        bare = replace(small_cfg, g=np.zeros(6))
        result = xp.sweep_beta0(bare, SMALL_GRID, horizon=30.0)
        assert np.max(result.efficiency) - np.min(result.efficiency) < 1e-12
        assert result.efficiency[0] == pytest.approx(result.baseline, abs=1e-12)

    def test_baseline_ignores_mode_parameters(self, small_cfg):
        kw = dict(horizon=30.0)
        b1 = xp.no_oscillator_baseline(small_cfg, **kw)
        b2 = xp.no_oscillator_baseline(replace(small_cfg, beta0=2.0, gamma=17.0,
                                               nbar=3.0), **kw)
        assert b1 == b2

    def test_workers_do_not_change_results(self, small_cfg):
        r1 = xp.sweep_beta0(small_cfg, SMALL_GRID, horizon=30.0, workers=1)
        r4 = xp.sweep_beta0(small_cfg, SMALL_GRID, horizon=30.0, workers=4)
        assert np.array_equal(r1.efficiency, r4.efficiency)

    def test_grid_strictly_increasing_and_bounded(self, small_cfg):
        result = xp.sweep_beta0(small_cfg, SMALL_GRID, horizon=30.0)
        assert np.all(np.diff(result.beta0) > 0)
        assert np.all(result.efficiency >= 0.0)
        assert np.all(result.efficiency <= 1.0 + 1e-10)


class TestEnsemble:
    def test_zero_std_equals_clean_curve(self, small_cfg):
        # 4 realizations: averaging identical values is then exact in floats
        spec = xp.DisorderSpec("frequencies", small_cfg.omega, 0.0, 4, 11)
        clean = xp.sweep_beta0(small_cfg, SMALL_GRID, horizon=30.0)
        ens = xp.disorder_ensemble(small_cfg, spec, SMALL_GRID, horizon=30.0)
        assert np.array_equal(ens.efficiency, clean.efficiency)
        assert np.all(ens.stderr == 0.0)

    def test_single_realization_identity(self, small_cfg):
        spec = xp.DisorderSpec("frequencies", small_cfg.omega, 0.1, 1, 21)
        ens = xp.disorder_ensemble(small_cfg, spec, SMALL_GRID, horizon=30.0)
        cfg_r = xp.realization_config(small_cfg, spec, 0)
        direct = xp.sweep_beta0(cfg_r, SMALL_GRID, horizon=30.0)
        assert np.array_equal(ens.efficiency, direct.efficiency)
        assert np.all(ens.stderr == 0.0)

    def test_bit_identical_across_worker_counts(self, small_cfg):
        spec = xp.DisorderSpec("frequencies", small_cfg.omega, 0.1, 6, 31)
        a = xp.disorder_ensemble(small_cfg, spec, SMALL_GRID, horizon=30.0, workers=1)
        b = xp.disorder_ensemble(small_cfg, spec, SMALL_GRID, horizon=30.0, workers=4)
        assert np.array_equal(a.efficiency, b.efficiency)
        assert np.array_equal(a.stderr, b.stderr)

    def test_continuity_in_std(self, small_cfg):
        clean = xp.sweep_beta0(small_cfg, SMALL_GRID, horizon=30.0)
        spec = xp.DisorderSpec("frequencies", small_cfg.omega, 1e-8, 4, 41)
        ens = xp.disorder_ensemble(small_cfg, spec, SMALL_GRID, horizon=30.0)
        assert np.max(np.abs(ens.efficiency - clean.efficiency)) < 1e-6

    def test_mean_and_stderr_definitions(self, small_cfg):
        spec = xp.DisorderSpec("frequencies", small_cfg.omega, 0.2, 4, 17)
        grid = xp.Beta0Grid(0.0, 1.0, 3)
        ens = xp.disorder_ensemble(small_cfg, spec, grid, horizon=20.0)
        per = []
        for r in range(4):
            cfg_r = xp.realization_config(small_cfg, spec, r)
            per.append(xp.sweep_beta0(cfg_r, grid, horizon=20.0).efficiency)
        per = np.array(per)
        assert np.allclose(ens.efficiency, per.mean(axis=0), atol=1e-15)
        assert np.allclose(ens.stderr, per.std(axis=0, ddof=1) / 2.0, atol=1e-15)


class TestCoherenceExperiment:
    def test_identical_configs_identical_series(self, fig4_cfg):
        ts, on, off = xp.coherence_experiment(fig4_cfg, fig4_cfg, horizon=15.0,
                                              sampling=61)
        assert np.array_equal(on, off)

    def test_geometry_mismatch_rejected(self, fig4_cfg):
        other = replace(fig4_cfg, omega=np.zeros(6))
        with pytest.raises(ValueError, match="share"):
            xp.coherence_experiment(fig4_cfg, other, horizon=5.0)

    def test_open_sink_lowers_coherence(self, fig4_cfg):
        closed = replace(fig4_cfg, sink_rate=0.0)
        _, on_closed, _ = xp.coherence_experiment(closed, horizon=40.0, sampling=201)
        _, on_open, _ = xp.coherence_experiment(fig4_cfg, horizon=40.0, sampling=201)
        # draining the acceptor can only reduce the transferred coherence
        late = slice(100, None)
        assert np.all(on_closed[late] >= on_open[late] - 1e-12)
        assert on_closed.max() > on_open.max()


class TestUnitBridge:
    def test_device_values(self):
        phys = xp.PhysicalParams(eta=0.06, mass_kg=1.4e-17, frequency=1.2e9,
                                 quality_factor=100.0)
        out = xp.unit_bridge(phys)
        assert out.g_model == pytest.approx(0.03)
        assert out.coupling_rate == pytest.approx(3.6e7)
        assert out.gamma_si == pytest.approx(1.2e7)
        assert out.q0_m == pytest.approx(
            math.sqrt(1.0545718e-34 / (2.0 * 1.4e-17 * 1.2e9)), rel=1e-6)
        assert out.weak_coupling

    def test_round_trip(self):
        from scipy.constants import hbar

        phys = xp.PhysicalParams(eta=0.041, mass_kg=3.3e-18, frequency=7.7e8,
                                 quality_factor=250.0)
        out = xp.unit_bridge(phys)
        mass_back = hbar / (2.0 * phys.frequency * out.q0_m**2)
        eta_back = 2.0 * out.coupling_rate / phys.frequency
        q_back = phys.frequency / out.gamma_si
        assert mass_back == pytest.approx(phys.mass_kg, rel=1e-12)
        assert eta_back == pytest.approx(phys.eta, rel=1e-12)
        assert q_back == pytest.approx(phys.quality_factor, rel=1e-12)

    def test_positivity_enforced(self):
        with pytest.raises(ValueError, match="eta"):
            xp.PhysicalParams(eta=0.0, mass_kg=1e-17, frequency=1e9,
                              quality_factor=100.0)
        with pytest.raises(ValueError, match="length_m"):
            xp.PhysicalParams(eta=0.06, mass_kg=1e-17, frequency=1e9,
                              quality_factor=100.0, length_m=-1e-6)
