import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import random_hermitian
from vibrochain import dynamics as dyn
from vibrochain import fullmodel as fm
from vibrochain.chain import ChainConfig


@pytest.fixture(scope="module")
def n2_cfg():
    return ChainConfig(n_sites=2, omega=[0.0, 1.0], g=[0.0, 0.5], hopping=0.1,
                       sink_rate=0.2, beta0=0.5, gamma=200.0, nbar=0.0)


@pytest.fixture(scope="module")
def n2_full(n2_cfg):
    return fm.FullModelConfig(chain=n2_cfg, epsilon=50.0, n_fock=8)


class TestOracleEquivalence:
    def test_matches_element_transcription(self, fig1_cfg, rng):
        cfg = replace(fig1_cfg, beta0=1.1)
        for _ in range(20):
            sigma = random_hermitian(rng, 7)
            for t in rng.uniform(0, 10, size=5):
                a = dyn.master_rhs(cfg, t, sigma)
                b = fm.superoperator_oracle_rhs(cfg, t, sigma)
                assert np.max(np.abs(a - b)) <= 1e-12

    def test_specific_time_point(self, fig1_cfg, rng):
        sigma = random_hermitian(rng, 7)
        a = dyn.master_rhs(fig1_cfg, 0.37, sigma)
        b = fm.superoperator_oracle_rhs(fig1_cfg, 0.37, sigma)
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_ground_projector_is_stationary(self, fig1_cfg):
        sigma = np.zeros((7, 7), dtype=complex)
        sigma[0, 0] = 1.0
        out = fm.superoperator_oracle_rhs(fig1_cfg, 0.9, sigma)
        assert np.max(np.abs(out)) < 1e-15

    def test_uniform_undriven_reduces_to_bare_commutator(self, fig1_cfg, rng):
        cfg = replace(fig1_cfg, g=np.full(6, 0.8), beta0=0.0, sink_rate=0.0,
                      nbar=0.0)
        block = random_hermitian(rng, 6)
        sigma = np.zeros((7, 7), dtype=complex)
        sigma[1:, 1:] = block
        out = fm.superoperator_oracle_rhs(cfg, 2.5, sigma)
        h = fm.effective_hamiltonian(cfg, 2.5)
        expected = -1j * (h @ sigma - sigma @ h)
        # dephasing is blind to the excited block when couplings are uniform
        assert np.max(np.abs(out[1:, 1:] - expected[1:, 1:])) < 1e-12


class TestFullModelConfig:
    def test_drive_consistency_enforced(self, n2_cfg):
        with pytest.raises(ValueError, match="beta0"):
            fm.FullModelConfig(chain=n2_cfg, epsilon=10.0, n_fock=8)

    def test_truncation_rule(self, n2_cfg):
        hot = replace(n2_cfg, nbar=5.0)
        with pytest.raises(ValueError, match="n_fock"):
            fm.FullModelConfig(chain=hot, epsilon=50.0, n_fock=20)
        need = fm.minimal_fock_dim(5.0)
        assert 70 <= need <= 80
        assert fm.thermal_tail_mass(5.0, need) < 1e-6
        fm.FullModelConfig(chain=hot, epsilon=50.0, n_fock=need)  # accepted

    def test_thermal_state_normalized(self):
        p = fm.thermal_occupations(1.3, 40)
        assert p.sum() == pytest.approx(1.0)
        assert p[0] > p[1] > p[2]
        cold = fm.thermal_occupations(0.0, 5)
        assert cold[0] == 1.0 and np.all(cold[1:] == 0.0)


class TestDisplacedRhs:
    def test_hermiticity_and_trace(self, n2_full, rng):
        d = n2_full.joint_dim
        rho = random_hermitian(rng, d)
        out = fm.displaced_rhs(n2_full, 0.7, rho)
        assert np.max(np.abs(out - out.conj().T)) < 1e-12 * max(1.0, np.abs(out).max())
        nosink = fm.FullModelConfig(
            chain=replace(n2_full.chain, sink_rate=0.0), epsilon=50.0, n_fock=8)
        out2 = fm.displaced_rhs(nosink, 0.7, rho)
        assert abs(np.trace(out2)) < 1e-10 * np.abs(out2).max()

    def test_generator_matches_dense_form(self, n2_full, rng):
        gen = fm.build_full_generator(n2_full)
        d = n2_full.joint_dim
        rho = random_hermitian(rng, d)
        y = np.concatenate([rho.ravel(), [0.0]])
        for t in (0.0, 0.37, 4.2):
            ref = fm.displaced_rhs(n2_full, t, rho)
            out = (gen.a @ y + math.sin(t) * (gen.b @ y) + math.cos(t) * (gen.c @ y))
            scale = np.abs(ref).max()
            assert np.max(np.abs(out[: d * d].reshape(d, d) - ref)) < 1e-12 * scale

    def test_decoupled_sites_follow_bare_chain(self, n2_cfg):
        bare = replace(n2_cfg, g=np.zeros(2), sink_rate=0.0, nbar=0.5, gamma=40.0)
        fcfg = fm.FullModelConfig(chain=bare, epsilon=0.25 * 40.0, n_fock=14)
        full = fm.integrate_full(fcfg, dyn.SingleExcitation(1), horizon=15.0,
                                 sampling=61)
        reduced = dyn.integrate(dyn.SingleExcitation(1), bare, horizon=15.0,
                                sampling=61, check_psd=0)
        assert np.max(np.abs(full.populations - reduced.populations)) < 1e-9
        # displaced oscillator stays thermal
        assert np.max(np.abs(full.boson_occupation - 0.5)) < 1e-4

    def test_pure_dephasing_keeps_populations(self, n2_cfg):
        frozen = replace(n2_cfg, hopping=1e-12, sink_rate=0.0, beta0=0.0)
        fcfg = fm.FullModelConfig(chain=frozen, epsilon=0.0, n_fock=6)
        init = np.zeros((3, 3), dtype=complex)
        init[1, 1] = init[2, 2] = 0.5
        init[1, 2] = init[2, 1] = 0.5
        traj = fm.integrate_full(fcfg, dyn.CustomState(init), horizon=20.0,
                                 sampling=41)
        assert np.max(np.abs(traj.populations - traj.populations[0])) < 1e-9
        # coherence decays
        assert np.abs(traj.electronic[-1, 1, 2]) < np.abs(traj.electronic[0, 1, 2])

    def test_dimension_check(self, n2_full):
        with pytest.raises(ValueError, match="joint state"):
            fm.displaced_rhs(n2_full, 0.0, np.zeros((5, 5), dtype=complex))


class TestAdiabaticCheck:
    def test_quick_agreement(self, n2_cfg):
        fcfg = fm.FullModelConfig(chain=n2_cfg, epsilon=50.0, n_fock=8)
        report = fm.adiabatic_check(fcfg, horizon=15.0, sampling=61)
        assert report.regime_ok
        assert report.rms_population_deviation < 0.01
        assert report.within(0.05)

    def test_regime_warning(self, n2_cfg):
        slow = replace(n2_cfg, gamma=1.0, beta0=0.5)
        fcfg = fm.FullModelConfig(chain=slow, epsilon=0.25, n_fock=8)
        with pytest.warns(fm.AdiabaticRegimeWarning):
            fm.adiabatic_check(fcfg, horizon=2.0, sampling=11)

    def test_decoupled_chain_agrees_exactly(self, n2_cfg):
        bare = replace(n2_cfg, g=np.zeros(2))
        fcfg = fm.FullModelConfig(chain=bare, epsilon=50.0, n_fock=6)
        report = fm.adiabatic_check(fcfg, horizon=20.0, sampling=81)
        assert report.rms_population_deviation < 1e-9


class TestDecayFit:
    def test_recovers_synthetic_rate(self):
        ts = np.linspace(0.0, 50.0, 200)
        values = 0.4 * np.exp(-0.031 * ts)
        assert fm.fit_decay_rate(ts, values) == pytest.approx(0.031, rel=1e-10)

    def test_window_and_guard(self):
        ts = np.linspace(0.0, 10.0, 50)
        vals = np.exp(-0.2 * ts)
        with pytest.raises(ValueError):
            fm.fit_decay_rate(ts, vals, t_min=11.0)
