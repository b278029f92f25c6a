"""Ground-truth spectrally sparse signal synthesis, noise, and model diagnostics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hankel import HankelSpace, lift_H
from .tensor_core import hosvd, matricize


@dataclass
class SpectralModel:
    """A sum of r damped complex sinusoids shared by s measurement vectors.

    Pole k is p_k = exp(2i pi f_k - tau_k); measurement l carries amplitude
    amps[l, k] on component k.
    """

    n: int
    freqs: np.ndarray  # (r,), in [0, 1)
    dampings: np.ndarray  # (r,), >= 0
    amps: np.ndarray  # (s, r) complex

    def __post_init__(self):
        if self.freqs.shape != self.dampings.shape or self.amps.shape[1] != len(self.freqs):
            raise ValueError("inconsistent model shapes")
        if np.any(self.dampings < 0):
            raise ValueError("dampings must be nonnegative")

    @property
    def r(self) -> int:
        return len(self.freqs)

    @property
    def s(self) -> int:
        return self.amps.shape[0]

    @property
    def poles(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.freqs - self.dampings)


def random_model(
    n: int,
    s: int,
    r: int,
    rng_seed: int | np.random.Generator = 0,
    damping: float = 0.0,
    min_freq_gap: float = 0.0,
) -> SpectralModel:
    """Random frequencies in [0,1) and unit-norm complex Gaussian amplitude vectors."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    while True:
        freqs = np.sort(rng.uniform(0.0, 1.0, size=r))
        if r == 1 or min_freq_gap <= 0:
            break
        gaps = np.diff(np.concatenate([freqs, [freqs[0] + 1.0]]))
        if gaps.min() > min_freq_gap:
            break
    amps = rng.standard_normal((s, r)) + 1j * rng.standard_normal((s, r))
    amps /= np.linalg.norm(amps, axis=0, keepdims=True)
    return SpectralModel(n, freqs, np.full(r, float(damping)), amps)


def gen_signal(model: SpectralModel) -> np.ndarray:
    """X[l, j] = sum_k amps[l, k] p_k^j, an s x n matrix."""
    vand = model.poles[:, None] ** np.arange(model.n)[None, :]  # (r, n)
    return model.amps @ vand


def add_noise(X: np.ndarray, sigma: float, rng_seed: int | np.random.Generator = 0) -> np.ndarray:
    """Add circular complex Gaussian noise with per-entry standard deviation sigma."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return X.copy()
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    noise = rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)
    return X + (sigma / np.sqrt(2.0)) * noise


def sigma_for_snr(X: np.ndarray, snr_db: float) -> float:
    """Noise level giving 10 log10(||X||_F^2 / (s n sigma^2)) = snr_db."""
    power = np.linalg.norm(X) ** 2 / X.size
    return float(np.sqrt(power * 10.0 ** (-snr_db / 10.0)))


@dataclass
class ModelDiagnostics:
    kappa: float
    mu0: float
    c_s: float
    mulrank: tuple[int, int, int]
    spectra: tuple[np.ndarray, np.ndarray, np.ndarray]


def diagnostics(
    X: np.ndarray,
    space: HankelSpace,
    r: int,
    rank_tol: float = 1e-9,
    dense_cap: int = 2**24,
) -> ModelDiagnostics:
    """Condition number, incoherence and numerical multilinear rank of the lift.

    Desk-scale only: the lifted tensor is materialized.
    """
    if space.n1 * space.n2 * space.s > dense_cap:
        raise ValueError("dimensions too large for dense diagnostics")
    Z = lift_H(X, space)
    spectra = []
    ranks = []
    smax_all = 0.0
    for mode in (1, 2, 3):
        sig = np.linalg.svd(matricize(Z, mode), compute_uv=False)
        spectra.append(sig)
        smax_all = max(smax_all, sig[0])
    for sig in spectra:
        ranks.append(int(np.sum(sig > rank_tol * smax_all)))
    smin_r = min(sig[r - 1] for sig in spectra)
    kappa = float(smax_all / smin_r) if smin_r > 0 else float("inf")
    F = hosvd(Z, r)
    row_l = np.max(np.sum(np.abs(F.L) ** 2, axis=1))
    row_r = np.max(np.sum(np.abs(F.R) ** 2, axis=1))
    mu0 = float(space.n / (space.c_s * r) * max(row_l, row_r))
    return ModelDiagnostics(
        kappa=kappa,
        mu0=mu0,
        c_s=space.c_s,
        mulrank=tuple(ranks),
        spectra=tuple(s[: r + 1] for s in spectra),
    )
