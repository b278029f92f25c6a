"""FFT-backed structured kernels for low-rank weighted-Hankel tensors.

Everything here evaluates contractions of the lifted tensor G(E) or of an
assembled Tucker tensor against factor matrices without ever materializing an
n1 x n2 x s array. The workhorse identities:

  a)  G*((L,R,V).S) = V B^H            with B = M3(conj(W)) M3(S)^H, where
      W(j1,j2,a) = [L(:,j1) * R(:,j2)](a) / sqrt(w_a)  (r^2 linear convolutions)
  b)  G(E) x3 V^H = G(V^H E)           and  G*(T x3 V) = V G*(T)
  c)  G(E) x1 L^H x2 R^H = conj(W) x3 E
  d)  G(E) x1 L^H (or x2 R^H) alone reduces to r^2 FFT correlations of the
      inverse-weighted rows of E against the reversed conjugated factor columns.

All convolutions run on a zero-padded power-of-two FFT grid of length >= n;
that length is enough because only output lags >= n1-1 (resp. n2-1) are read,
which circular wrap-around cannot reach.
"""
from __future__ import annotations

from dataclasses import dataclass

import threading

import numpy as np
import scipy.fft
import scipy.sparse as sp

from .hankel import HankelSpace, lift_G
from .tensor_core import TuckerFactors, matricize, multi_mode_product

_tls = threading.local()
_POOL_CAP_BYTES = 1 << 24  # one-shot giant batches just allocate fresh


def _workspace(key: str, shape: tuple[int, ...]) -> np.ndarray:
    """Reusable per-thread scratch buffer; fresh allocations above the cap.

    Large numpy temporaries are mmap-backed and page-fault on every call;
    reusing scratch keeps the FFT kernels memory-bound on actual data.
    Results returned to callers never alias these buffers.
    """
    if 16 * int(np.prod(shape)) > _POOL_CAP_BYTES:
        return np.zeros(shape, dtype=complex)
    pool = getattr(_tls, "pool", None)
    if pool is None:
        pool = _tls.pool = {}
    buf = pool.get(key)
    if buf is None or buf.shape != shape:
        buf = pool[key] = np.zeros(shape, dtype=complex)
    return buf


def _next_pow2(x: int) -> int:
    return 1 << max(0, (x - 1).bit_length())


def _workers(nfft: int, batch: int) -> int:
    # threading pays off only when the transform batch leaves cache
    return 2 if nfft * batch >= 1 << 16 else 1


def conv_tensor_W(L: np.ndarray, R: np.ndarray, space: HankelSpace) -> np.ndarray:
    """Pairwise column convolutions, weighted: W[j1, j2, a] = [L_j1 * R_j2](a) / sqrt(w_a)."""
    if L.shape[0] != space.n1 or R.shape[0] != space.n2:
        raise ValueError(f"factor shapes {L.shape}, {R.shape} do not match space {space.dims}")
    if L.shape[1] != R.shape[1]:
        raise ValueError("L and R must have the same number of columns")
    r = L.shape[1]
    nfft = _next_pow2(space.n)
    wk = _workers(nfft, r * r)
    bufL = _workspace("conv_L", (r, nfft))
    bufL[:, : space.n1] = L.T
    bufL[:, space.n1 :] = 0
    bufR = _workspace("conv_R", (r, nfft))
    bufR[:, : space.n2] = R.T
    bufR[:, space.n2 :] = 0
    FL = scipy.fft.fft(bufL, axis=1, workers=wk)
    FR = scipy.fft.fft(bufR, axis=1, workers=wk)
    prod = _workspace("conv_P", (r * r, nfft))
    np.multiply(FL[:, None, :], FR[None, :, :], out=prod.reshape(r, r, nfft))
    full = scipy.fft.ifft(prod, axis=1, overwrite_x=True, workers=wk)
    return np.multiply(full[:, : space.n], 1.0 / space.sqrt_w).reshape(r, r, space.n)


def matrix_B(W: np.ndarray, S: np.ndarray) -> np.ndarray:
    """B = M3(conj(W)) M3(S)^H, the length-n side of the factored de-lift."""
    r = S.shape[0]
    if W.shape[:2] != (r, r) or S.shape != (r, r, r):
        raise ValueError(f"rank mismatch: W is {W.shape}, core is {S.shape}")
    return matricize(np.conj(W), 3) @ matricize(S, 3).conj().T


@dataclass
class FactorizedZ:
    """G*((L,R,V).S) held as the rank-r product V B^H, never materialized by default."""

    V: np.ndarray  # (s, r)
    B: np.ndarray  # (n, r)

    def materialize(self) -> np.ndarray:
        return self.V @ self.B.conj().T

    def entries(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Selected entries Z[rows, cols] at O(len(rows) * r) cost."""
        return np.einsum("ij,ij->i", self.V[rows], self.B.conj()[cols])


def dehankel_factored(F: TuckerFactors, space: HankelSpace) -> FactorizedZ:
    """Factored form of G*(assemble(F)) without building the lifted tensor."""
    if F.dims != space.dims:
        raise ValueError(f"factor dims {F.dims} do not match space {space.dims}")
    W = conv_tensor_W(F.L, F.R, space)
    return FactorizedZ(F.V, matrix_B(W, F.S))


def mode3_lift_mul(E, Vh: np.ndarray, space: HankelSpace) -> np.ndarray:
    """G(E) x3 V^H computed as G(V^H E); E may be sparse (cost O(m r))."""
    if Vh.shape[1] != space.s or E.shape != (space.s, space.n):
        raise ValueError("shape mismatch in mode-3 lifted product")
    if sp.issparse(E):
        VhE = np.asarray(E.T @ Vh.T).T  # Vh @ E without densifying E
    else:
        VhE = Vh @ E
    small = HankelSpace(space.n1, space.n2, Vh.shape[0])
    return lift_G(VhE, small)


def joint12_contract(W: np.ndarray, E) -> np.ndarray:
    """conj(W) x3 E for E of shape (k, n); sparse E costs O(m r^2)."""
    r, _, n = W.shape
    if E.shape[1] != n:
        raise ValueError(f"E has {E.shape[1]} columns, expected {n}")
    Wm = np.conj(W).reshape(r * r, n)
    out = (E @ Wm.T) if not sp.issparse(E) else np.asarray(E @ Wm.T)
    return np.ascontiguousarray(out.reshape(E.shape[0], r, r).transpose(1, 2, 0))


def single_mode_mul(E, F: np.ndarray, mode: int, space: HankelSpace) -> np.ndarray:
    """G(E) x1 F^H (mode=1) or G(E) x2 F^H (mode=2) via r^2-batch FFT correlation.

    E is (k, n) with arbitrary k. The lag algebra: with Et = D^{-1}(E) and the
    factor column reversed, sum_i Et(i3, i + i2) conj(F(i, j)) is the linear
    convolution of Et(i3, :) with conj(F(::-1, j)) read at lag (len(F) - 1 + i2).
    Output dims: (r, n2, k) for mode 1, (n1, r, k) for mode 2.
    """
    if mode not in (1, 2):
        raise ValueError("mode must be 1 or 2")
    nf = space.n1 if mode == 1 else space.n2
    if F.shape[0] != nf:
        raise ValueError(f"factor has {F.shape[0]} rows, expected {nf} for mode {mode}")
    if E.shape[1] != space.n:
        raise ValueError(f"E has {E.shape[1]} columns, expected {space.n}")
    if sp.issparse(E):
        E = E.toarray()
    k, r = E.shape[0], F.shape[1]
    nfft = _next_pow2(space.n)
    wk = _workers(nfft, k * r)
    bufE = _workspace("smm_E", (k, nfft))
    np.multiply(E, 1.0 / space.sqrt_w, out=bufE[:, : space.n])
    bufE[:, space.n :] = 0
    bufF = _workspace("smm_F", (r, nfft))
    nf_len = F.shape[0]
    np.conj(F[::-1, :].T, out=bufF[:, :nf_len])
    bufF[:, nf_len:] = 0
    FE = scipy.fft.fft(bufE, axis=1, workers=wk)  # (k, nfft)
    Ff = scipy.fft.fft(bufF, axis=1, workers=wk)
    prod = _workspace("smm_P", (k * r, nfft))
    np.multiply(FE[:, None, :], Ff[None, :, :], out=prod.reshape(k, r, nfft))
    conv = scipy.fft.ifft(prod, axis=1, overwrite_x=True, workers=wk).reshape(k, r, nfft)
    if mode == 1:
        out = conv[:, :, space.n1 - 1 : space.n1 - 1 + space.n2]  # (k, r, n2)
        return np.ascontiguousarray(out.transpose(1, 2, 0))
    out = conv[:, :, space.n2 - 1 : space.n2 - 1 + space.n1]  # (k, r, n1)
    return np.ascontiguousarray(out.transpose(2, 1, 0))


def scaled_grams(F: TuckerFactors) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grams of the three breve matrices in O((s+n) r^2 + r^4).

    breve(L) = (conj(V) kron conj(R)) M1(S)^H and cyclically, so e.g.
    breve(L)^H breve(L) = M1((I, R^H R, V^H V).S) M1(S)^H.
    """
    gl = F.L.conj().T @ F.L
    gr = F.R.conj().T @ F.R
    gv = F.V.conj().T @ F.V
    GL = matricize(multi_mode_product(F.S, None, gr, gv), 1) @ matricize(F.S, 1).conj().T
    GR = matricize(multi_mode_product(F.S, gl, None, gv), 2) @ matricize(F.S, 2).conj().T
    GV = matricize(multi_mode_product(F.S, gl, gr, None), 3) @ matricize(F.S, 3).conj().T
    # exact Hermitian symmetry keeps the downstream Cholesky solves honest
    return (
        0.5 * (GL + GL.conj().T),
        0.5 * (GR + GR.conj().T),
        0.5 * (GV + GV.conj().T),
    )
