"""Direction-of-arrival estimation on a sparse linear array via completion + MUSIC.

Sources at angles theta arrive at a virtual uniform half-wavelength array of n
elements with steering vector a(theta) = [1, p, ..., p^{n-1}], p = exp(i pi
sin(theta)). Only a subset of sensors exists and a fraction of the
snapshot-sensor cells is dropped; completing the snapshot matrix first and
running MUSIC on the completed data recovers the angles.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hankel import default_space, observe, weight_D
from .signals import add_noise, sigma_for_snr
from .solver import SolverConfig, scalht_run

# 17-sensor sparse subset of a 64-element array used by the demo pipeline
DEMO_SENSORS = (2, 4, 6, 10, 20, 21, 23, 30, 33, 38, 39, 40, 49, 50, 51, 56, 62)


class PeakCountError(RuntimeError):
    """The pseudo-spectrum exposed fewer local maxima than requested sources."""


@dataclass
class SLAConfig:
    n: int = 64
    sensors: tuple[int, ...] = DEMO_SENSORS
    s: int = 32
    angles_deg: tuple[float, ...] = (1.0, 2.0, 4.0, 6.0)
    dropout: float = 0.1
    snr_db: float = 40.0

    def __post_init__(self):
        idx = np.asarray(self.sensors)
        if len(np.unique(idx)) != len(idx) or idx.min() < 0 or idx.max() >= self.n:
            raise ValueError("sensor indices must be distinct and within [0, n)")
        ang = np.asarray(self.angles_deg)
        if np.any(ang < -90) or np.any(ang >= 90):
            raise ValueError("angles must lie in [-90, 90) degrees")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout fraction must lie in [0, 1)")

    @property
    def r(self) -> int:
        return len(self.angles_deg)


def steering(n: int, theta_deg: np.ndarray | float) -> np.ndarray:
    """a(theta) columns for a half-wavelength ULA of n elements."""
    theta = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    p = np.exp(1j * np.pi * np.sin(np.deg2rad(theta)))
    return p[None, :] ** np.arange(n)[:, None]


def sla_signal(sla: SLAConfig, rng: np.random.Generator) -> np.ndarray:
    """Noiseless snapshot matrix X* (s x n) over the virtual full array."""
    amps = rng.standard_normal((sla.s, sla.r)) + 1j * rng.standard_normal((sla.s, sla.r))
    amps /= np.linalg.norm(amps, axis=0, keepdims=True)
    return amps @ steering(sla.n, np.asarray(sla.angles_deg)).T


def sla_observation_mask(sla: SLAConfig, rng: np.random.Generator):
    """Retained (snapshot, sensor) cells: the SLA grid minus a dropout fraction."""
    rows = np.repeat(np.arange(sla.s), len(sla.sensors))
    cols = np.tile(np.asarray(sla.sensors, dtype=np.intp), sla.s)
    total = len(rows)
    keep = rng.choice(total, size=total - int(round(sla.dropout * total)), replace=False)
    keep.sort()
    return rows[keep], cols[keep]


def music_estimate(X: np.ndarray, r: int, grid_step_deg: float = 0.01) -> np.ndarray:
    """MUSIC angle estimates from a snapshot matrix X (s x n), sorted ascending.

    The spatial covariance is (1/s) X^T (X^T)^H; the pseudo-spectrum is scanned
    on a uniform grid over [-90, 90) and each of the r largest local maxima is
    refined by 3-point parabolic interpolation.
    """
    s, n = X.shape
    if r >= n:
        raise ValueError(f"source count {r} must be below the array size {n}")
    Xt = X.T
    C = (Xt @ Xt.conj().T) / s
    ew, ev = np.linalg.eigh(C)
    En = ev[:, : n - r]  # noise subspace: eigenvectors beyond the top r
    grid = np.arange(-90.0, 90.0, grid_step_deg)
    A = steering(n, grid)
    denom = np.sum(np.abs(En.conj().T @ A) ** 2, axis=0)
    P = 1.0 / np.maximum(denom, 1e-300)

    interior = (P[1:-1] > P[:-2]) & (P[1:-1] >= P[2:])
    peaks = np.where(interior)[0] + 1
    if len(peaks) < r:
        raise PeakCountError(f"found {len(peaks)} spectrum peaks, need {r}")
    top = peaks[np.argsort(P[peaks])[-r:]]

    est = []
    for i in top:
        y0, y1, y2 = P[i - 1], P[i], P[i + 1]
        curv = y0 - 2 * y1 + y2
        delta = 0.0 if curv == 0 else 0.5 * (y0 - y2) / curv
        delta = float(np.clip(delta, -0.5, 0.5))
        est.append(grid[i] + delta * grid_step_deg)
    return np.sort(np.asarray(est))


def doa_trial(
    sla: SLAConfig,
    rng_seed: int,
    eta: float = 0.25,
    max_iters: int = 200,
    grid_step_deg: float = 0.01,
    split_k: int = 0,
    projection=None,
) -> tuple[np.ndarray | None, float]:
    """One completion + MUSIC trial; returns (estimates or None, angle error norm)."""
    rng = np.random.default_rng(rng_seed)
    X_star = sla_signal(sla, rng)
    sigma = sigma_for_snr(X_star, sla.snr_db)
    X_noisy = add_noise(X_star, sigma, rng)
    rows, cols = sla_observation_mask(sla, rng)
    space = default_space(sla.n, sla.s)
    obs = observe(weight_D(X_noisy, space, "forward"), space, rows=rows, cols=cols)
    cfg = SolverConfig(rank=sla.r, eta=eta, max_iters=max_iters,
                       split_k=split_k, projection=projection)
    result = scalht_run(obs, space, cfg)
    try:
        theta_hat = music_estimate(result.X_hat, sla.r, grid_step_deg)
    except PeakCountError:
        return None, float("nan")
    err = float(np.linalg.norm(theta_hat - np.sort(np.asarray(sla.angles_deg))))
    return theta_hat, err
