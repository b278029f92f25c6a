"""Sequential spectral initialization from the rescaled observed lift.

The starting tensor is Z0 = p^{-1} G(P_Omega(Y*)). Factors are extracted in
order: L, R from the top-r left singular subspaces of modes 1 and 2 of Z0;
V from mode 3 of the mode-1-contracted tensor Z0 x1 L^H (initializing V from
M3(Z0) directly is unreliable because single-cell lifted bases have unit
mode-3 spectral norm, so the mode-3 unfolding of the sampling error does not
concentrate); the core by contracting Z0 with all three factors; finally an
optional row-norm projection of (L, R).

Two equivalent execution paths are provided. The dense path materializes Z0
(only allowed below an entry-count cap). The lean path never forms the tensor:
mode-1/2 Grams of Z0 are window sums over the diagonals of the n x n matrix
C = conj(E^H E) with E = p^{-1} D^{-1}(P_Omega(Y*)), and the mode-1-contracted
tensor comes from the FFT correlation kernel applied to the sparse E.
"""
from __future__ import annotations

import numpy as np

from .hankel import HankelSpace, ObservationSet, lift_G
from .kernels import scaled_grams, single_mode_mul
from .tensor_core import (
    TuckerFactors,
    matricize,
    mode_product,
    multi_mode_product,
    top_r_svd,
)

DENSE_CAP = 2**27  # tensor entries above which the dense path is refused
LEAN_PREFERRED = 2**20  # auto mode switches to the lean path above this


def observed_lift(obs: ObservationSet, space: HankelSpace, dense_cap: int = DENSE_CAP) -> np.ndarray:
    """Dense Z0 = p^{-1} G(P_Omega(Y*)); duplicate samples accumulate."""
    if space.n1 * space.n2 * space.s > dense_cap:
        raise ValueError(
            f"dense lift of {space.dims} exceeds the {dense_cap}-entry cap; "
            "use the lean initialization path"
        )
    return lift_G(obs.dense_projection(), space) / obs.p


def _rescaled_projection(obs: ObservationSet, space: HankelSpace, inverse_weighted: bool):
    """p^{-1} P_Omega(Y*) as sparse s x n, optionally with columns divided by sqrt(w).

    The inverse-weighted variant E satisfies Z0[i1, i2, i3] = E[i3, i1+i2]; the
    plain variant feeds the FFT contraction kernel, which weights internally.
    """
    uk, ua, counts, yvals = obs.unique_cells
    data = counts * yvals / obs.p
    if inverse_weighted:
        data = data / space.sqrt_w[ua]
    return obs.csr_from_cell_values(data)


def _window_gram(C: np.ndarray, out_dim: int, win: int) -> np.ndarray:
    """G[i, i+d] = sum_{t=i}^{i+win-1} C[t, t+d]: banded window sums over diagonals."""
    G = np.empty((out_dim, out_dim), dtype=C.dtype)
    for d in range(out_dim):
        diag = np.diagonal(C, offset=d)
        cs = np.cumsum(diag)
        w = cs[win - 1 :].copy()
        w[1:] -= cs[: len(w) - 1]
        vals = w[: out_dim - d]
        idx = np.arange(out_dim - d)
        G[idx, idx + d] = vals
        if d:
            G[idx + d, idx] = np.conj(vals)
    return G


def _lean_mode12_grams(E, space: HankelSpace) -> tuple[np.ndarray, np.ndarray]:
    """Mode-1 and mode-2 Grams of G(E) without forming the lifted tensor."""
    K = np.asarray((E.conj().T @ E).todense())
    C = K.conj()  # C[a, b] = sum_k E[k, a] conj(E[k, b])
    G1 = _window_gram(C, space.n1, space.n2)
    G2 = _window_gram(C, space.n2, space.n1)
    return G1, G2


def _top_eigvecs(G: np.ndarray, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading-r orthonormal eigenvectors of a Hermitian PSD matrix, eigvals descending."""
    Gs = 0.5 * (G + G.conj().T)
    ew, ev = np.linalg.eigh(Gs)
    return ev[:, -1 : -r - 1 : -1], np.maximum(ew[-1 : -r - 1 : -1], 0.0)


def sequential_init(
    obs: ObservationSet,
    space: HankelSpace,
    r: int,
    proj_radius: float | None = None,
    dense_cap: int = DENSE_CAP,
    path: str = "auto",
) -> TuckerFactors:
    """Build the starting factor quadruple from the observed lift.

    proj_radius is the row-norm bound B of the scaled projection, or None to
    skip projection entirely (the simulation default).
    """
    if r > min(space.dims):
        raise ValueError(f"rank {r} exceeds min dimension {min(space.dims)}")
    size = space.n1 * space.n2 * space.s
    if path == "auto":
        path = "lean" if size > LEAN_PREFERRED else "dense"
    if path == "dense":
        Z0 = observed_lift(obs, space, dense_cap)
        Lp = top_r_svd(matricize(Z0, 1), r).U
        Rp = top_r_svd(matricize(Z0, 2), r).U
        T1 = mode_product(Z0, Lp.conj().T, 1)
    elif path == "lean":
        E = _rescaled_projection(obs, space, inverse_weighted=True)
        G1, G2 = _lean_mode12_grams(E, space)
        Lp, _ = _top_eigvecs(G1, r)
        Rp, _ = _top_eigvecs(G2, r)
        T1 = single_mode_mul(_rescaled_projection(obs, space, False), Lp, 1, space)
    else:
        raise ValueError(f"unknown initialization path {path!r}")
    V = top_r_svd(matricize(T1, 3), r).U
    S = multi_mode_product(T1, None, Rp.conj().T, V.conj().T)
    L, R = scaled_project(Lp, Rp, V, S, proj_radius, space)
    return TuckerFactors(L, R, V, S)


def init_sigma_max(F0: TuckerFactors) -> float:
    """Largest mode-1 singular value of the initial reconstruction.

    For orthonormal L, R, V this equals the top singular value of M1(S);
    used to turn the auto projection radius into a concrete number.
    """
    return float(np.linalg.svd(matricize(F0.S, 1), compute_uv=False)[0])


def scaled_project(
    Lp: np.ndarray,
    Rp: np.ndarray,
    V: np.ndarray,
    S: np.ndarray,
    radius: float | None,
    space: HankelSpace,
) -> tuple[np.ndarray, np.ndarray]:
    """Shrink rows of (L, R) so the lifted tensor's unfolding rows obey the bound.

    Row i of L is scaled by min{1, B / (sqrt(n) ||row i of L breve(L)^H||)} and
    likewise for R, with the breve Grams taken at the *input* factors. Rows
    already inside the radius are returned bit-identical.
    """
    if radius is None or not np.isfinite(radius):
        return Lp, Rp
    if radius <= 0:
        raise ValueError("projection radius must be positive")
    GL, GR, _ = scaled_grams(TuckerFactors(Lp, Rp, V, S))
    bound = radius / np.sqrt(space.n)

    def shrink(M: np.ndarray, G: np.ndarray) -> np.ndarray:
        row_sq = np.einsum("ir,rt,it->i", M, G, M.conj()).real
        norms = np.sqrt(np.maximum(row_sq, 0.0))
        scale = np.ones_like(norms)
        over = norms > bound
        scale[over] = bound / norms[over]
        if not over.any():
            return M
        return M * scale[:, None]

    return shrink(Lp, GL), shrink(Rp, GR)
