"""Scaled gradient descent iteration for low-rank Hankel tensor completion.

Each step preconditions the factor gradients by the inverse Grams of the
complementary breve factors (the core by the inverse factor Grams), giving a
convergence rate that does not degrade with the condition number of the lifted
tensor. Termination is on relative core change, an optional target recovery
error (experiments only), a maximum iteration count, or a divergence guard.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .gradient import _forward, _gradients_from_state, _loss_from_state
from .hankel import HankelSpace, ObservationSet, weight_D
from .initialization import init_sigma_max, sequential_init
from .kernels import dehankel_factored, scaled_grams
from .tensor_core import TuckerFactors, solve_hpd


@dataclass
class SolverConfig:
    rank: int
    eta: float = 0.25
    max_iters: int = 500
    tol_core: float = 1e-7
    projection: float | str | None = None  # None = off, "auto", or a radius
    proj_const: float = 8.0  # C_B in the auto radius C_B sqrt(r) sigma_hat
    split_k: int = 0  # 0 = reuse the full observation set every iteration
    rng_seed: int = 0
    target_rel_err: float | None = None  # needs ground truth; experiments only
    divergence_limit: float = 1e6
    init_path: str = "auto"
    track_loss: bool = True

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError(f"step size must satisfy 0 < eta <= 1, got {self.eta}")
        if self.tol_core <= 0:
            raise ValueError("tol_core must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass
class RunTrace:
    iterations: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    core_change: list[float] = field(default_factory=list)
    rel_err: list[float] = field(default_factory=list)
    wall_time: list[float] = field(default_factory=list)

    def iters_to_rel_err(self, threshold: float) -> float:
        """First iteration index at which the recovery error drops below threshold."""
        for k, e in zip(self.iterations, self.rel_err):
            if e <= threshold:
                return float(k)
        return float("nan")


@dataclass
class SolveResult:
    factors: TuckerFactors
    X_hat: np.ndarray
    trace: RunTrace
    reason: str


def scaled_step(
    F: TuckerFactors,
    g,
    eta: float,
    grams: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> TuckerFactors:
    """One preconditioned update; all inverses go through Hermitian solves."""
    GL, GR, GV = grams if grams is not None else scaled_grams(F)
    L = F.L - eta * solve_hpd(GL, g.dL.conj().T, name="L").conj().T
    R = F.R - eta * solve_hpd(GR, g.dR.conj().T, name="R").conj().T
    V = F.V - eta * solve_hpd(GV, g.dV.conj().T, name="V").conj().T
    core_dir = g.dS
    core_dir = _mode_solve(core_dir, F.L, 1)
    core_dir = _mode_solve(core_dir, F.R, 2)
    core_dir = _mode_solve(core_dir, F.V, 3)
    return TuckerFactors(L, R, V, F.S - eta * core_dir)


def _mode_solve(T: np.ndarray, factor: np.ndarray, mode: int) -> np.ndarray:
    """T x_mode (factor^H factor)^{-1} via a Hermitian solve on the unfolding."""
    from .tensor_core import dematricize, matricize

    gram = factor.conj().T @ factor
    name = {1: "L", 2: "R", 3: "V"}[mode]
    M = matricize(T, mode)
    return dematricize(solve_hpd(gram, M, name=name), mode, T.shape)


def reconstruct_X(F: TuckerFactors, space: HankelSpace) -> np.ndarray:
    """X_hat = D^{-1}(G*((L,R,V).S)) through the factored de-lift."""
    fz = dehankel_factored(F, space)
    return weight_D(fz.materialize(), space, "inverse")


def _split_observations(obs: ObservationSet, k: int, seed: int) -> list[ObservationSet]:
    """Shuffle and partition into k+1 equal disjoint sets; leftovers discarded."""
    mhat = obs.m // (k + 1)
    if mhat < 1:
        raise ValueError(f"cannot split {obs.m} samples into {k + 1} nonempty sets")
    perm = np.random.default_rng(seed).permutation(obs.m)
    parts = []
    for i in range(k + 1):
        sel = perm[i * mhat : (i + 1) * mhat]
        parts.append(
            ObservationSet(
                obs.space, obs.rows[sel], obs.cols[sel], obs.values[sel], obs.with_replacement
            )
        )
    return parts


def _rel_err(F: TuckerFactors, space: HankelSpace, X_true: np.ndarray, x_norm: float) -> float:
    return float(np.linalg.norm(reconstruct_X(F, space) - X_true) / x_norm)


def scalht_run(
    obs: ObservationSet,
    space: HankelSpace,
    cfg: SolverConfig,
    X_true: np.ndarray | None = None,
) -> SolveResult:
    """Full pipeline: init, scaled iterations, termination, signal reconstruction.

    `obs` carries entries of the weighted matrix Y* = D(X*). When X_true (the
    unweighted ground truth) is supplied, the trace records the relative
    recovery error per iteration and target_rel_err stopping becomes available.
    """
    if cfg.rank > min(space.dims):
        raise ValueError(f"rank {cfg.rank} exceeds min dimension {min(space.dims)}")

    if cfg.split_k > 0:
        parts = _split_observations(obs, cfg.split_k, cfg.rng_seed)
        init_obs, iter_obs = parts[0], parts[1:]
        max_iters = min(cfg.max_iters, cfg.split_k)
    else:
        init_obs, iter_obs = obs, None
        max_iters = cfg.max_iters

    t0 = time.perf_counter()
    F = sequential_init(init_obs, space, cfg.rank, proj_radius=None, path=cfg.init_path)
    radius: float | None
    if cfg.projection == "auto":
        radius = cfg.proj_const * np.sqrt(cfg.rank) * init_sigma_max(F)
    elif cfg.projection is None:
        radius = None
    else:
        radius = float(cfg.projection)
    if radius is not None:
        L, R = _project_factors(F, radius, space)
        F = TuckerFactors(L, R, F.V, F.S)

    trace = RunTrace()
    x_norm = np.linalg.norm(X_true) if X_true is not None else 1.0
    if X_true is not None:
        trace.iterations.append(0)
        trace.loss.append(np.nan)
        trace.core_change.append(np.nan)
        trace.rel_err.append(_rel_err(F, space, X_true, x_norm))
        trace.wall_time.append(time.perf_counter() - t0)
        if cfg.target_rel_err is not None and trace.rel_err[-1] <= cfg.target_rel_err:
            return SolveResult(F, reconstruct_X(F, space), trace, "target_reached")

    reason = "max_iters"
    for k in range(max_iters):
        active = iter_obs[k % len(iter_obs)] if iter_obs else obs
        state = _forward(F, active, space)
        g = _gradients_from_state(F, state, space)
        F_next = scaled_step(F, g, cfg.eta, grams=(state.GL, state.GR, state.GV))
        if radius is not None:
            L, R = _project_factors(F_next, radius, space)
            F_next = TuckerFactors(L, R, F_next.V, F_next.S)

        core_scale = np.linalg.norm(F.S)
        change = np.linalg.norm(F_next.S - F.S) / core_scale if core_scale > 0 else np.inf
        loss = _loss_from_state(F, state, active) if cfg.track_loss else np.nan
        F = F_next

        trace.iterations.append(k + 1)
        trace.loss.append(loss)
        trace.core_change.append(change)
        trace.wall_time.append(time.perf_counter() - t0)
        if X_true is not None:
            trace.rel_err.append(_rel_err(F, space, X_true, x_norm))

        if not np.isfinite(change) or change > cfg.divergence_limit or (
            cfg.track_loss and not np.isfinite(loss)
        ):
            reason = "diverged"
            break
        if X_true is not None and cfg.target_rel_err is not None:
            if trace.rel_err[-1] <= cfg.target_rel_err:
                reason = "target_reached"
                break
        if change <= cfg.tol_core:
            reason = "converged"
            break

    return SolveResult(F, reconstruct_X(F, space), trace, reason)


def _project_factors(F: TuckerFactors, radius: float, space: HankelSpace):
    from .initialization import scaled_project

    return scaled_project(F.L, F.R, F.V, F.S, radius, space)


__all__ = [
    "SolverConfig",
    "RunTrace",
    "SolveResult",
    "scaled_step",
    "scalht_run",
    "reconstruct_X",
]
