"""Fast evaluation of the penalized completion loss and its four gradients.

The loss for a factor quadruple F = (L, R, V, S) with lifted tensor
Z = (L,R,V].S over an observation set Omega of the weighted signal Y*:

    f(F) = 1/(2p) ||P_Omega(G* Z - Y*)||_F^2 + 1/2 ||(I - G G*)(Z)||_F^2

The Hankel penalty is never materialized: after the algebraic split, all four
gradients reduce to the sparse residual M = p^{-1} P_Omega(V B^H - Y*), the
r x n combination Ehat = V^H M - (V^H V) B^H, and structured contractions from
the kernels module. Per-call cost O(n r^2 log n + n r^3 + s r^2 + m r).

Gradients carry the definitional normalization of the loss (twice the
conjugate-Wirtinger derivative): for any factor perturbation Delta,
d/dt f(F + t Delta) = Re<grad, Delta> at t = 0, so -grad is a descent
direction and the stated step sizes apply unchanged. This normalization is
pinned by the finite-difference tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hankel import HankelSpace, ObservationSet
from .kernels import (
    FactorizedZ,
    conv_tensor_W,
    joint12_contract,
    matrix_B,
    scaled_grams,
    single_mode_mul,
)
from .tensor_core import TuckerFactors, matricize, multi_mode_product


@dataclass
class GradientBundle:
    """Gradients with respect to the four factors, matching their shapes."""

    dL: np.ndarray
    dR: np.ndarray
    dV: np.ndarray
    dS: np.ndarray


@dataclass
class ResidualM:
    """m-sparse residual M = p^{-1} P_Omega(Z - Y*), supported on Omega."""

    matrix: sp.csr_matrix
    cell_residuals: np.ndarray  # (Z - Y*) on the distinct observed cells

    @property
    def m(self) -> int:
        return self.matrix.nnz


@dataclass
class _IterState:
    """Everything the solver reuses per iteration besides the gradients."""

    W: np.ndarray
    B: np.ndarray
    M: ResidualM
    Ehat: np.ndarray
    GL: np.ndarray
    GR: np.ndarray
    GV: np.ndarray
    gram_L: np.ndarray
    gram_R: np.ndarray
    gram_V: np.ndarray


def residual_M(fz: FactorizedZ, obs: ObservationSet) -> ResidualM:
    """Evaluate Z = V B^H on the observed cells only and form the sparse residual."""
    uk, ua, counts, yvals = obs.unique_cells
    zvals = fz.entries(uk, ua)
    diff = zvals - yvals
    return ResidualM(obs.csr_from_cell_values(counts * diff / obs.p), diff)


def ehat(V: np.ndarray, M: ResidualM, B: np.ndarray) -> np.ndarray:
    """Ehat = V^H M - (V^H V) B^H, the r x n residual seen through V."""
    VhM = np.asarray(M.matrix.T @ V.conj()).T  # V^H M via sparse matvec
    return VhM - (V.conj().T @ V) @ B.conj().T


def _forward(F: TuckerFactors, obs: ObservationSet, space: HankelSpace) -> _IterState:
    if F.dims != space.dims:
        raise ValueError(f"factor dims {F.dims} do not match space {space.dims}")
    W = conv_tensor_W(F.L, F.R, space)
    B = matrix_B(W, F.S)
    M = residual_M(FactorizedZ(F.V, B), obs)
    GL, GR, GV = scaled_grams(F)
    return _IterState(
        W=W,
        B=B,
        M=M,
        Ehat=ehat(F.V, M, B),
        GL=GL,
        GR=GR,
        GV=GV,
        gram_L=F.L.conj().T @ F.L,
        gram_R=F.R.conj().T @ F.R,
        gram_V=F.V.conj().T @ F.V,
    )


def _gradients_from_state(
    F: TuckerFactors, st: _IterState, space: HankelSpace
) -> GradientBundle:
    hatW_L = single_mode_mul(st.Ehat, F.R, 2, space)  # (n1, r, r)
    dL = matricize(hatW_L, 1) @ matricize(F.S, 1).conj().T + F.L @ st.GL
    hatW_R = single_mode_mul(st.Ehat, F.L, 1, space)  # (r, n2, r)
    dR = matricize(hatW_R, 2) @ matricize(F.S, 2).conj().T + F.R @ st.GR
    dV = np.asarray(st.M.matrix @ st.B) - F.V @ (st.B.conj().T @ st.B) + F.V @ st.GV
    dS = joint12_contract(st.W, st.Ehat) + multi_mode_product(
        F.S, st.gram_L, st.gram_R, st.gram_V
    )
    return GradientBundle(dL, dR, dV, dS)


def grad_all(F: TuckerFactors, obs: ObservationSet, space: HankelSpace) -> GradientBundle:
    """All four gradients of the penalized loss, via the structured fast path."""
    return _gradients_from_state(F, _forward(F, obs, space), space)


def _loss_from_state(F: TuckerFactors, st: _IterState, obs: ObservationSet) -> float:
    _, _, counts, _ = obs.unique_cells
    data_term = float(np.sum(counts * np.abs(st.M.cell_residuals) ** 2)) / (2 * obs.p)
    # ||(I - G G*)(Z)||^2 = ||Z||^2 - ||G* Z||^2 since G G* is an orthogonal projector
    z_sq = np.real(
        np.vdot(F.S, multi_mode_product(F.S, st.gram_L, st.gram_R, st.gram_V))
    )
    gz_sq = np.real(np.sum(st.gram_V * (st.B.conj().T @ st.B).T))
    return data_term + 0.5 * max(z_sq - gz_sq, 0.0)


def loss_value(F: TuckerFactors, obs: ObservationSet, space: HankelSpace) -> float:
    """f(F) evaluated from factored quantities only."""
    return _loss_from_state(F, _forward(F, obs, space), obs)
