"""Brute-force reference implementations, used only by the test suite.

Every fast kernel and gradient in the package is validated against the dense
definitional computation performed here. These paths materialize full lifted
tensors and Kronecker factors, so they refuse instances beyond a small cap.
"""
from __future__ import annotations

import numpy as np

from .hankel import HankelSpace, ObservationSet, adjoint_G, lift_G
from .tensor_core import TuckerFactors, assemble, matricize, multi_mode_product

DENSE_CAP = 10**6  # tensor entries; the oracle is never a production path


def _check_cap(space: HankelSpace) -> None:
    if space.n1 * space.n2 * space.s > DENSE_CAP:
        raise ValueError("instance too large for the dense oracle")


def oracle_conv_W(L: np.ndarray, R: np.ndarray, space: HankelSpace) -> np.ndarray:
    """Direct O(n1 n2 r^2) summation of the weighted pairwise convolutions."""
    r = L.shape[1]
    W = np.zeros((r, r, space.n), dtype=complex)
    for i1 in range(space.n1):
        for i2 in range(space.n2):
            W[:, :, i1 + i2] += L[i1][:, None] * R[i2][None, :]
    return W / space.sqrt_w


def oracle_breve_matrices(F: TuckerFactors) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Explicit Kronecker-product breve matrices."""
    Lb = np.kron(F.V.conj(), F.R.conj()) @ matricize(F.S, 1).conj().T
    Rb = np.kron(F.V.conj(), F.L.conj()) @ matricize(F.S, 2).conj().T
    Vb = np.kron(F.R.conj(), F.L.conj()) @ matricize(F.S, 3).conj().T
    return Lb, Rb, Vb


def oracle_breve_grams(F: TuckerFactors) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    Lb, Rb, Vb = oracle_breve_matrices(F)
    return Lb.conj().T @ Lb, Rb.conj().T @ Rb, Vb.conj().T @ Vb


def oracle_dehankel(F: TuckerFactors, space: HankelSpace) -> np.ndarray:
    """G*(assemble(F)) through the dense tensor."""
    _check_cap(space)
    return adjoint_G(assemble(F), space)


def hankel_penalty_tensor(T: np.ndarray, space: HankelSpace) -> np.ndarray:
    """(I - G G*)(T), the component of T off the weighted-Hankel subspace."""
    return T - lift_G(adjoint_G(T, space), space)


def residual_tensor(F: TuckerFactors, obs: ObservationSet, space: HankelSpace) -> np.ndarray:
    """p^{-1} G(P_Omega(G* Z - Y*)) + (I - G G*)(Z) for Z = assemble(F), densely."""
    _check_cap(space)
    Z = assemble(F)
    resid = adjoint_G(Z, space)
    uk, ua, counts, yvals = obs.unique_cells
    proj = np.zeros((space.s, space.n), dtype=complex)
    proj[uk, ua] = counts * (resid[uk, ua] - yvals)
    return lift_G(proj, space) / obs.p + hankel_penalty_tensor(Z, space)


def oracle_gradients(F: TuckerFactors, obs: ObservationSet, space: HankelSpace):
    """Definitional gradients: matricizations of the residual tensor times breves."""
    E = residual_tensor(F, obs, space)
    Lb, Rb, Vb = oracle_breve_matrices(F)
    dL = matricize(E, 1) @ Lb
    dR = matricize(E, 2) @ Rb
    dV = matricize(E, 3) @ Vb
    dS = multi_mode_product(E, F.L.conj().T, F.R.conj().T, F.V.conj().T)
    return dL, dR, dV, dS


def oracle_loss(F: TuckerFactors, obs: ObservationSet, space: HankelSpace) -> float:
    """Dense evaluation of the penalized completion loss."""
    _check_cap(space)
    Z = assemble(F)
    resid = adjoint_G(Z, space)
    uk, ua, counts, yvals = obs.unique_cells
    data_term = np.sum(counts * np.abs(resid[uk, ua] - yvals) ** 2) / (2 * obs.p)
    pen = hankel_penalty_tensor(Z, space)
    return float(data_term + 0.5 * np.linalg.norm(pen) ** 2)


def oracle_single_mode(E: np.ndarray, F: np.ndarray, mode: int, space: HankelSpace) -> np.ndarray:
    """Triple-loop G(E) x1 F^H / x2 F^H on the materialized lift."""
    _check_cap(space)
    k = E.shape[0]
    lifted = lift_G(E, HankelSpace(space.n1, space.n2, k))
    return multi_mode_product(lifted, F.conj().T if mode == 1 else None,
                              F.conj().T if mode == 2 else None, None)


def oracle_scaled_step(
    F: TuckerFactors, dL, dR, dV, dS, eta: float
) -> TuckerFactors:
    """Preconditioned step with explicitly materialized breve Grams."""
    GL, GR, GV = oracle_breve_grams(F)
    L = F.L - eta * dL @ np.linalg.inv(GL)
    R = F.R - eta * dR @ np.linalg.inv(GR)
    V = F.V - eta * dV @ np.linalg.inv(GV)
    S = F.S - eta * multi_mode_product(
        dS,
        np.linalg.inv(F.L.conj().T @ F.L),
        np.linalg.inv(F.R.conj().T @ F.R),
        np.linalg.inv(F.V.conj().T @ F.V),
    )
    return TuckerFactors(L, R, V, S)
