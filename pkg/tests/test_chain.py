import math
from dataclasses import replace

import numpy as np
import pytest

from vibrochain.chain import ChainConfig, ROOT_HALF, dephasing_weights, site_modulation


class TestConfigValidation:
    def test_fig1_parameters_accepted(self, fig1_cfg):
        assert fig1_cfg.n_sites == 6
        assert fig1_cfg.q0 == pytest.approx(ROOT_HALF)
        assert fig1_cfg.dephasing_rate == pytest.approx(5.0e-5)

    def test_single_site_rejected(self):
        with pytest.raises(ValueError, match="n_sites"):
            ChainConfig(n_sites=1, omega=[0.0], g=[0.0], hopping=0.1, sink_rate=0.2)

    def test_zero_hopping_rejected(self):
        with pytest.raises(ValueError, match="hopping"):
            ChainConfig(n_sites=2, omega=[0, 0], g=[0, 0], hopping=0.0, sink_rate=0.2)

    @pytest.mark.parametrize("field", ["nu", "q0", "gamma"])
    def test_nonpositive_scale_rejected(self, field):
        kwargs = dict(n_sites=2, omega=[0, 0], g=[0, 0], hopping=0.1, sink_rate=0.2)
        kwargs[field] = 0.0
        with pytest.raises(ValueError, match=field):
            ChainConfig(**kwargs)

    @pytest.mark.parametrize("field", ["sink_rate", "beta0", "nbar"])
    def test_negative_rate_rejected(self, field):
        kwargs = dict(n_sites=2, omega=[0, 0], g=[0, 0], hopping=0.1, sink_rate=0.2)
        kwargs[field] = -0.1
        with pytest.raises(ValueError, match=field):
            ChainConfig(**kwargs)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="omega"):
            ChainConfig(n_sites=3, omega=[0, 0], g=[0, 0, 0], hopping=0.1, sink_rate=0.2)
        with pytest.raises(ValueError, match="g"):
            ChainConfig(n_sites=3, omega=[0, 0, 0], g=[0, 0], hopping=0.1, sink_rate=0.2)

    def test_vectors_are_read_only(self, fig1_cfg):
        with pytest.raises(ValueError):
            fig1_cfg.omega[0] = 1.0


class TestSiteModulation:
    def test_no_drive_at_t_zero(self, fig1_cfg):
        # sin 0 = 0, so only the bare half-splitting remains
        assert site_modulation(fig1_cfg, 3, 0.0) == pytest.approx(0.5)
        assert site_modulation(fig1_cfg, 1, 0.0) == 0.0

    def test_quarter_period_value(self, fig1_cfg):
        cfg = replace(fig1_cfg, beta0=0.65)
        expected = 0.5 - 2.0 * 1.5 * 0.65 / math.sqrt(2.0)
        got = site_modulation(cfg, 3, math.pi / 2.0)
        assert got == pytest.approx(expected, abs=1e-14)
        assert got == pytest.approx(-0.87886, abs=5e-6)

    def test_index_bounds(self, fig1_cfg):
        with pytest.raises(IndexError):
            site_modulation(fig1_cfg, 0, 0.0)
        with pytest.raises(IndexError):
            site_modulation(fig1_cfg, 7, 0.0)

    def test_periodicity(self, fig1_cfg):
        cfg = replace(fig1_cfg, beta0=1.3)
        period = 2.0 * math.pi / cfg.nu
        for t in (0.0, 0.7, 13.9):
            assert site_modulation(cfg, 3, t + period) == pytest.approx(
                site_modulation(cfg, 3, t), abs=1e-12)

    def test_zero_drive_is_static(self, fig1_cfg):
        for t in np.linspace(0, 20, 7):
            assert site_modulation(fig1_cfg, 3, t) == 0.5


class TestDephasingRate:
    def test_fig1_value(self, fig1_cfg):
        assert fig1_cfg.dephasing_rate == pytest.approx(0.5 * 11.0 / 1.1e5)

    def test_moderate_damping_value(self, fig1_cfg):
        cfg = replace(fig1_cfg, gamma=1100.0)
        assert cfg.dephasing_rate == pytest.approx(5.0e-3)

    def test_zero_point_dephasing_survives(self, fig1_cfg):
        cfg = replace(fig1_cfg, nbar=0.0)
        assert cfg.dephasing_rate == pytest.approx(cfg.q0**2 / cfg.gamma)
        assert cfg.dephasing_rate > 0

    def test_independent_of_couplings_and_drive(self, fig1_cfg):
        for g, b in [(np.zeros(6), 0.0), (np.full(6, 2.0), 3.0)]:
            assert replace(fig1_cfg, g=g, beta0=b).dephasing_rate == fig1_cfg.dephasing_rate


class TestDephasingWeights:
    def test_hand_values(self, fig1_cfg):
        w = dephasing_weights(fig1_cfg)
        assert w[3, 6] == pytest.approx(-2.0)        # -2 (1.5 - 0.5)^2
        assert w[0, 6] == pytest.approx(-0.5)        # ground coupling is zero
        assert np.all(np.diag(w) == 0.0)

    def test_symmetric_nonpositive(self, fig1_cfg):
        w = dephasing_weights(fig1_cfg)
        assert np.array_equal(w, w.T)
        assert np.all(w <= 0.0)

    def test_shift_invariance_of_excited_block(self, fig1_cfg):
        w = dephasing_weights(fig1_cfg)
        shifted = dephasing_weights(replace(fig1_cfg, g=fig1_cfg.g + 0.7))
        assert np.allclose(shifted[1:, 1:], w[1:, 1:], atol=1e-12)
        # row/column 0 tracks the shift
        assert not np.allclose(shifted[0, 1:], w[0, 1:])
