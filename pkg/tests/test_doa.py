import numpy as np
import pytest

from scalht.doa import (
    PeakCountError,
    SLAConfig,
    doa_trial,
    music_estimate,
    sla_observation_mask,
    sla_signal,
    steering,
)


class TestSteering:
    def test_first_row_ones(self):
        A = steering(8, np.array([-30.0, 0.0, 45.0]))
        assert np.allclose(A[0], 1.0)

    def test_broadside(self):
        a = steering(6, 0.0)[:, 0]
        assert np.allclose(a, 1.0)

    def test_unit_modulus(self):
        A = steering(16, np.array([12.3, -71.0]))
        assert np.allclose(np.abs(A), 1.0)


class TestMusic:
    def test_single_source_noiseless(self, rng):
        amps = rng.standard_normal((64, 1)) + 1j * rng.standard_normal((64, 1))
        X = amps @ steering(32, 0.0).T
        est = music_estimate(X, 1)
        assert abs(est[0]) <= 0.005

    def test_two_separated_sources(self, rng):
        angles = np.array([-10.0, 20.0])
        amps = rng.standard_normal((128, 2)) + 1j * rng.standard_normal((128, 2))
        X = amps @ steering(32, angles).T
        noise = (rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape))
        X = X + noise * np.linalg.norm(X) / np.linalg.norm(noise) * 10 ** (-30 / 20)
        est = music_estimate(X, 2)
        assert np.abs(est - angles).max() <= 0.1

    def test_r_at_least_n_rejected(self, rng):
        X = rng.standard_normal((4, 6)) + 0j
        with pytest.raises(ValueError):
            music_estimate(X, 6)

    def test_too_few_peaks(self, rng):
        amps = rng.standard_normal((16, 1)) + 1j * rng.standard_normal((16, 1))
        X = amps @ steering(3, 0.0).T
        with pytest.raises(PeakCountError):
            music_estimate(X, 2, grid_step_deg=30.0)


class TestSLA:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SLAConfig(sensors=(1, 1, 2))
        with pytest.raises(ValueError):
            SLAConfig(sensors=(70,))
        with pytest.raises(ValueError):
            SLAConfig(angles_deg=(95.0,))
        with pytest.raises(ValueError):
            SLAConfig(dropout=1.0)

    def test_default_config(self):
        sla = SLAConfig()
        assert sla.n == 64 and len(sla.sensors) == 17 and sla.s == 32
        assert sla.r == 4

    def test_observation_mask(self):
        sla = SLAConfig()
        rows, cols = sla_observation_mask(sla, np.random.default_rng(0))
        total = sla.s * len(sla.sensors)
        assert len(rows) == total - int(round(0.1 * total))
        assert set(np.unique(cols)).issubset(set(sla.sensors))

    def test_signal_uses_configured_angles(self):
        sla = SLAConfig(angles_deg=(0.0,), snr_db=100.0)
        X = sla_signal(sla, np.random.default_rng(0))
        # broadside source: all columns identical
        assert np.allclose(X, X[:, :1])

    def test_trial_pipeline(self):
        sla = SLAConfig(snr_db=40.0)
        theta, err = doa_trial(sla, rng_seed=7)
        assert theta is not None
        assert err <= 0.2
