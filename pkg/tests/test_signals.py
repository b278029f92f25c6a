import numpy as np
import pytest

from conftest import rel_err
from scalht.hankel import lift_H, make_space
from scalht.signals import (
    SpectralModel,
    add_noise,
    diagnostics,
    gen_signal,
    random_model,
    sigma_for_snr,
)


class TestGenSignal:
    def test_constant_pole(self):
        model = SpectralModel(5, np.array([0.0]), np.array([0.0]), np.ones((3, 1), dtype=complex))
        assert np.allclose(gen_signal(model), np.ones((3, 5)))

    def test_damping_decay(self):
        tau = 0.7
        model = SpectralModel(6, np.array([0.0]), np.array([tau]), np.ones((2, 1), dtype=complex))
        X = gen_signal(model)
        ratios = np.abs(X[:, 1:] / X[:, :-1])
        assert np.allclose(ratios, np.exp(-tau))

    def test_double_sum_oracle(self, rng):
        freqs = np.array([0.1, 0.3])
        amps = np.ones((4, 2), dtype=complex)
        model = SpectralModel(8, freqs, np.zeros(2), amps)
        X = gen_signal(model)
        direct = np.zeros((4, 8), dtype=complex)
        for l in range(4):
            for j in range(8):
                for k in range(2):
                    direct[l, j] += amps[l, k] * np.exp(2j * np.pi * freqs[k]) ** j
        assert np.allclose(X, direct, atol=1e-12)

    def test_linearity_in_amplitudes(self, rng):
        freqs = np.array([0.2, 0.45])
        a1 = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        a2 = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        m = lambda a: gen_signal(SpectralModel(7, freqs, np.zeros(2), a))
        assert np.allclose(m(a1 + 2 * a2), m(a1) + 2 * m(a2), atol=1e-12)

    def test_lift_is_sum_of_outer_products(self, rng):
        model = random_model(7, 3, 2, rng)
        X = gen_signal(model)
        spc = make_space(4, 4, 3)
        direct = np.zeros((4, 4, 3), dtype=complex)
        for k in range(2):
            p = model.poles[k]
            a1 = p ** np.arange(4)
            a2 = p ** np.arange(4)
            direct += np.einsum("i,j,k->ijk", a1, a2, model.amps[:, k])
        assert rel_err(lift_H(X, spc), direct) < 1e-12

    def test_random_model_amplitudes_normalized(self):
        model = random_model(9, 5, 3, 0)
        assert np.allclose(np.linalg.norm(model.amps, axis=0), 1.0)


class TestNoise:
    def test_zero_sigma(self, rng):
        X = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        assert np.array_equal(add_noise(X, 0.0, 1), X)

    def test_negative_sigma(self, rng):
        with pytest.raises(ValueError):
            add_noise(np.zeros((2, 2), dtype=complex), -1.0, 0)

    def test_empirical_variance(self):
        X = np.zeros((250, 400), dtype=complex)  # 1e5 entries
        sigma = 0.8
        E = add_noise(X, sigma, 123)
        assert abs(np.mean(np.abs(E) ** 2) - sigma**2) < 0.05 * sigma**2

    def test_determinism(self, rng):
        X = rng.standard_normal((3, 3)) + 0j
        assert np.array_equal(add_noise(X, 0.5, 9), add_noise(X, 0.5, 9))

    def test_snr_inversion(self, rng):
        X = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
        for target in (10.0, 25.0, 40.0):
            sigma = sigma_for_snr(X, target)
            achieved = 10 * np.log10(np.linalg.norm(X) ** 2 / (X.size * sigma**2))
            assert abs(achieved - target) < 0.01


class TestDiagnostics:
    def test_single_sinusoid(self):
        model = SpectralModel(9, np.array([0.17]), np.zeros(1), np.ones((4, 1), dtype=complex))
        X = gen_signal(model)
        spc = make_space(5, 5, 4)
        d = diagnostics(X, spc, 1)
        assert abs(d.kappa - 1.0) < 1e-10
        assert d.mulrank == (1, 1, 1)

    def test_two_frequencies(self, rng):
        model = random_model(9, 4, 2, rng)
        X = gen_signal(model)
        d = diagnostics(X, make_space(5, 5, 4), 2)
        assert d.mulrank == (2, 2, 2)
        assert d.kappa >= 1.0

    def test_exact_multilinear_rank_battery(self):
        # random exact models with distinct poles and full-rank amplitudes
        for t in range(20):
            rng = np.random.default_rng((13, t))
            r = int(rng.integers(1, 4))
            s = int(rng.integers(r, 7))
            n = int(rng.integers(2 * r + 1, 16))
            model = random_model(n, s, r, rng)
            X = gen_signal(model)
            n1 = (n + 2) // 2
            spc = make_space(n1, n + 1 - n1, s)
            if min(spc.n1, spc.n2, s) < r:
                continue
            d = diagnostics(X, spc, r)
            assert d.mulrank == (r, r, r)

    def test_incoherence_separated_frequencies(self):
        # well-separated undamped tones: mu0 stays O(1)
        rng = np.random.default_rng(99)
        n, s, r = 63, 8, 4
        model = random_model(n, s, r, rng, min_freq_gap=2.5 / n)
        X = gen_signal(model)
        d = diagnostics(X, make_space(32, 32, s), r)
        assert d.mu0 <= 10.0

    def test_dense_cap(self, rng):
        X = rng.standard_normal((4, 9)) + 0j
        with pytest.raises(ValueError):
            diagnostics(X, make_space(5, 5, 4), 2, dense_cap=10)
