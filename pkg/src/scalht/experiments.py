"""Monte-Carlo experiment drivers: phase transitions, convergence tables,
runtime scaling, noisy recovery, and the sparse-array DOA pipeline.

Each driver returns a list of result rows and can write them as CSV with a
JSON sidecar holding the fully resolved configuration (reproducibility without
a plotting dependency). Outputs are deterministic for a fixed base seed apart
from wall-clock columns.
"""
from __future__ import annotations

import csv
import json
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .doa import SLAConfig, doa_trial
from .gradient import _forward, _gradients_from_state
from .hankel import default_space, observe, weight_D
from .signals import add_noise, gen_signal, random_model, sigma_for_snr
from .solver import SolverConfig, scalht_run

SUCCESS_REL_ERR = 1e-3


def _trial_seed(base: int, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(int(base),) + tuple(int(i) for i in indices))


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        return out.stdout.strip() or "unknown"
    except Exception:
        return "unknown"


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_sidecar(path: str | Path, config: dict) -> None:
    sidecar = Path(path).with_suffix(Path(path).suffix + ".json")
    payload = {"config": config, "build": _git_describe()}
    sidecar.write_text(json.dumps(payload, indent=2, default=str) + "\n")


def _run_trial(
    n: int,
    s: int,
    r: int,
    m: int,
    seed: np.random.SeedSequence,
    eta: float = 0.25,
    max_iters: int = 250,
    target_rel_err: float | None = SUCCESS_REL_ERR,
    sigma: float = 0.0,
    tol_core: float = 1e-7,
    sampling: str = "without_replacement",
    split_k: int = 0,
    projection=None,
):
    """One completion run on a fresh random model; returns the SolveResult and X*."""
    rng = np.random.default_rng(seed)
    model = random_model(n, s, r, rng)
    X_star = gen_signal(model)
    X_obs = add_noise(X_star, sigma, rng) if sigma > 0 else X_star
    space = default_space(n, s)
    obs = observe(weight_D(X_obs, space, "forward"), space, m=m, mode=sampling, rng_seed=rng)
    cfg = SolverConfig(
        rank=r,
        eta=eta,
        max_iters=max_iters,
        tol_core=tol_core,
        target_rel_err=target_rel_err,
        split_k=split_k,
        projection=projection,
        rng_seed=int(rng.integers(2**31)),
    )
    result = scalht_run(obs, space, cfg, X_true=X_star)
    return result, X_star


def _success_rate(n, s, r, m, trials, base_seed, eta, max_iters, workers=1,
                  split_k=0, projection=None) -> float:
    def one(t):
        res, _ = _run_trial(n, s, r, m, _trial_seed(base_seed, s, m, t), eta, max_iters,
                            split_k=split_k, projection=projection)
        return res.trace.rel_err[-1] <= SUCCESS_REL_ERR

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(one, range(trials)))
    else:
        hits = sum(one(t) for t in range(trials))
    return hits / trials


def run_phase_transition(
    out: str | Path | None = None,
    n: int = 63,
    r: int = 2,
    s_grid=tuple(range(16, 49, 4)),
    m_grid=tuple(range(100, 501, 25)),
    trials: int = 30,
    seed: int = 0,
    eta: float = 0.25,
    max_iters: int = 600,
    workers: int = 1,
    split_k: int = 0,
    projection=None,
) -> list[list]:
    """Success rate over an (s, m) grid at fixed rank."""
    rows = []
    for s in s_grid:
        for m in m_grid:
            if m > s * n:
                continue
            rate = _success_rate(n, s, r, m, trials, seed, eta, max_iters, workers,
                                 split_k, projection)
            rows.append([n, s, r, m, trials, rate])
    if out:
        write_csv(out, ["n", "s", "r", "m", "trials", "success_rate"], rows)
        write_sidecar(out, dict(kind="phase", n=n, r=r, s_grid=list(s_grid),
                                m_grid=list(m_grid), trials=trials, seed=seed, eta=eta))
    return rows


def success_frontier(
    n: int,
    s: int,
    r: int,
    m_lo: int,
    m_hi: int,
    trials: int = 30,
    seed: int = 0,
    eta: float = 0.25,
    target_rate: float = 0.9,
    max_iters: int = 600,
    workers: int = 1,
) -> int:
    """Smallest m in [m_lo, m_hi] reaching the target success rate, by bisection.

    Assumes the success rate is nondecreasing in m (true away from the
    transition noise floor); the returned frontier is deterministic per seed.
    """
    lo, hi = m_lo, m_hi
    if _success_rate(n, s, r, hi, trials, seed, eta, max_iters, workers) < target_rate:
        raise RuntimeError(f"success rate below {target_rate} even at m = {hi}")
    while hi - lo > max(1, (m_hi - m_lo) // 64):
        mid = (lo + hi) // 2
        if _success_rate(n, s, r, mid, trials, seed, eta, max_iters, workers) >= target_rate:
            hi = mid
        else:
            lo = mid
    return hi


def run_success_curve(
    out: str | Path | None = None,
    n: int = 63,
    s: int = 32,
    r: int = 8,
    p_grid=tuple(np.round(np.linspace(0.05, 0.95, 19), 4)),
    trials: int = 30,
    seed: int = 0,
    eta: float = 0.25,
    max_iters: int = 400,
    workers: int = 1,
    split_k: int = 0,
    projection=None,
) -> list[list]:
    """Success rate versus observation ratio at fixed dimensions."""
    rows = []
    for p in p_grid:
        m = int(round(p * s * n))
        rate = _success_rate(n, s, r, m, trials, seed, eta, max_iters, workers,
                             split_k, projection)
        rows.append([n, s, r, float(p), m, trials, rate])
    if out:
        write_csv(out, ["n", "s", "r", "p", "m", "trials", "success_rate"], rows)
        write_sidecar(out, dict(kind="curve", n=n, s=s, r=r, p_grid=list(map(float, p_grid)),
                                trials=trials, seed=seed, eta=eta))
    return rows


def run_convergence(
    out: str | Path | None = None,
    n: int = 511,
    s: int = 512,
    r: int = 6,
    p_list=(0.22, 0.17),
    trials: int = 5,
    seed: int = 0,
    eta: float = 0.4,
    thresholds=(1e-2, 1e-4, 1e-6, 1e-8),
    max_iters: int = 400,
    split_k: int = 0,
    projection=None,
) -> dict[float, list[float]]:
    """Average iterations to reach each relative-error threshold, per ratio."""
    final_thr = min(thresholds)
    table: dict[float, list[float]] = {}
    rows = []
    for p in p_list:
        m = int(round(p * s * n))
        counts = np.zeros(len(thresholds))
        for t in range(trials):
            res, _ = _run_trial(
                n, s, r, m, _trial_seed(seed, int(p * 1e6), t), eta,
                max_iters=max_iters, target_rel_err=final_thr, tol_core=1e-14,
                split_k=split_k, projection=projection,
            )
            for j, thr in enumerate(thresholds):
                counts[j] += res.trace.iters_to_rel_err(thr)
            for k, e, lo, w in zip(res.trace.iterations, res.trace.rel_err,
                                   res.trace.loss, res.trace.wall_time):
                rows.append([float(p), t, k, e, lo, w])
        table[p] = list(counts / trials)
    if out:
        write_csv(out, ["p", "trial", "iteration", "rel_err", "loss", "wall_time"], rows)
        write_sidecar(out, dict(kind="converge", n=n, s=s, r=r, p_list=list(p_list),
                                trials=trials, seed=seed, eta=eta,
                                thresholds=list(thresholds),
                                mean_iterations={str(p): v for p, v in table.items()}))
    return table


def median_gradient_time(
    n: int,
    s: int,
    r: int = 6,
    m: int | None = None,
    seed: int = 0,
    repeats: int = 15,
) -> float:
    """Median wall time of one full gradient evaluation at the given scale."""
    rng = np.random.default_rng(_trial_seed(seed, n, s))
    model = random_model(n, s, r, rng)
    X_star = gen_signal(model)
    space = default_space(n, s)
    if m is None:
        m = int(np.floor(2.1 * s * r * np.log(n)))
    m = min(m, s * n)
    obs = observe(weight_D(X_star, space, "forward"), space, m=m, rng_seed=rng)
    from .initialization import sequential_init

    F = sequential_init(obs, space, r)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        st = _forward(F, obs, space)
        _gradients_from_state(F, st, space)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_runtime(
    out: str | Path | None = None,
    n_grid=(255, 511, 1023, 2047),
    s_grid=(256,),
    r: int = 6,
    trials: int = 3,
    seed: int = 0,
    eta: float = 0.4,
    sample_factor: float = 2.1,
    target_rel_err: float = 1e-3,
    max_iters: int = 150,
    split_k: int = 0,
    projection=None,
) -> list[list]:
    """Iterations / seconds to the target error, plus per-gradient time, per (n, s)."""
    rows = []
    for n in n_grid:
        for s in s_grid:
            m = min(int(np.floor(sample_factor * s * r * np.log(n))), s * n)
            iters, secs = [], []
            for t in range(trials):
                t0 = time.perf_counter()
                res, _ = _run_trial(
                    n, s, r, m, _trial_seed(seed, n, s, t), eta,
                    max_iters=max_iters, target_rel_err=target_rel_err,
                    split_k=split_k, projection=projection,
                )
                secs.append(time.perf_counter() - t0)
                iters.append(res.trace.iterations[-1])
            grad_t = median_gradient_time(n, s, r, m, seed)
            rows.append([n, s, r, m, trials, float(np.mean(iters)),
                         float(np.median(secs)), grad_t])
    if out:
        write_csv(out, ["n", "s", "r", "m", "trials", "avg_iters",
                        "median_seconds", "median_gradient_seconds"], rows)
        write_sidecar(out, dict(kind="runtime", n_grid=list(n_grid), s_grid=list(s_grid),
                                r=r, trials=trials, seed=seed, eta=eta,
                                sample_factor=sample_factor))
    return rows


def run_noise_sweep(
    out: str | Path | None = None,
    snr_grid=(20.0, 30.0, 40.0, 50.0, 60.0),
    n: int = 63,
    s: int = 32,
    r: int = 4,
    p: float = 0.6,
    trials: int = 10,
    seed: int = 0,
    eta: float = 0.25,
    max_iters: int = 300,
    split_k: int = 0,
    projection=None,
) -> list[list]:
    """Final recovery error versus SNR; the floor scales linearly with sigma."""
    m = int(round(p * s * n))
    rows = []
    for snr in snr_grid:
        errs, sigmas = [], []
        for t in range(trials):
            seq = _trial_seed(seed, int(snr * 10), t)
            rng = np.random.default_rng(seq)
            model = random_model(n, s, r, rng)
            X_star = gen_signal(model)
            sigma = sigma_for_snr(X_star, snr)
            X_noisy = add_noise(X_star, sigma, rng)
            space = default_space(n, s)
            obs = observe(weight_D(X_noisy, space, "forward"), space, m=m, rng_seed=rng)
            cfg = SolverConfig(rank=r, eta=eta, max_iters=max_iters,
                               split_k=split_k, projection=projection,
                               rng_seed=int(rng.integers(2**31)))
            res = scalht_run(obs, space, cfg, X_true=X_star)
            errs.append(res.trace.rel_err[-1])
            sigmas.append(sigma)
        rows.append([float(snr), float(np.mean(sigmas)), trials,
                     float(np.mean(errs)), float(np.median(errs))])
    if out:
        write_csv(out, ["snr_db", "sigma", "trials", "mean_rel_err", "median_rel_err"], rows)
        write_sidecar(out, dict(kind="noise", snr_grid=list(map(float, snr_grid)), n=n, s=s,
                                r=r, p=p, trials=trials, seed=seed, eta=eta))
    return rows


def run_doa(
    out: str | Path | None = None,
    sla: SLAConfig | None = None,
    snr_grid=None,
    trials: int = 20,
    seed: int = 0,
    eta: float = 0.25,
    grid_step_deg: float = 0.01,
    split_k: int = 0,
    projection=None,
) -> list[list]:
    """RMSE (degrees) of completion + MUSIC versus SNR on the sparse array."""
    base = sla if sla is not None else SLAConfig()
    snrs = snr_grid if snr_grid is not None else (base.snr_db,)
    rows = []
    for snr in snrs:
        cfg = SLAConfig(base.n, base.sensors, base.s, base.angles_deg, base.dropout, float(snr))
        sq_errs, failures = [], 0
        for t in range(trials):
            seed_t = int(np.random.SeedSequence(
                entropy=(seed, int(float(snr) * 10), t)).generate_state(1)[0])
            theta_hat, err = doa_trial(cfg, seed_t, eta=eta, grid_step_deg=grid_step_deg,
                                       split_k=split_k, projection=projection)
            if theta_hat is None:
                failures += 1
            else:
                sq_errs.append(err**2)
        rmse = float(np.sqrt(np.mean(sq_errs))) if sq_errs else float("nan")
        rows.append([float(snr), trials, failures, rmse])
    if out:
        write_csv(out, ["snr_db", "trials", "failed_peak_trials", "rmse_deg"], rows)
        write_sidecar(out, dict(kind="doa", n=base.n, sensors=list(base.sensors), s=base.s,
                                angles_deg=list(base.angles_deg), dropout=base.dropout,
                                snr_grid=list(map(float, snrs)), trials=trials, seed=seed))
    return rows
