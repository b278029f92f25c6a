"""Dense complex order-3 tensor algebra: matricizations, mode products,
Tucker assembly, truncated SVD / HOSVD, and small Hermitian solves.

Conventions (zero-based everywhere):
    mode-1 matricization  M1[i1, i2 + i3*n2] = T[i1, i2, i3]
    mode-2 matricization  M2[i2, i1 + i3*n1] = T[i1, i2, i3]
    mode-3 matricization  M3[i3, i1 + i2*n1] = T[i1, i2, i3]
    mode product          (T x_1 M)[j, i2, i3] = sum_i T[i, i2, i3] M[j, i]

With these layouts the unfoldings of an assembled Tucker tensor satisfy
M1((L,R,V).S) = L @ M1(S) @ kron(V, R).T  (plain transpose, not conjugate:
the complex convention used throughout this package).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg


class IllConditionedGramError(RuntimeError):
    """A Hermitian solve met a Gram matrix too close to singular.

    Usually means the requested rank exceeds the effective rank of the data.
    """

    def __init__(self, name: str, cond: float):
        super().__init__(
            f"Gram matrix of factor '{name}' is ill-conditioned "
            f"(condition estimate {cond:.3e}); the rank is likely over-specified"
        )
        self.factor_name = name
        self.cond = cond


@dataclass
class TuckerFactors:
    """Factor quadruple (L, R, V, S) representing the tensor S x1 L x2 R x3 V."""

    L: np.ndarray  # (n1, r)
    R: np.ndarray  # (n2, r)
    V: np.ndarray  # (s, r)
    S: np.ndarray  # (r, r, r)

    def __post_init__(self):
        r = self.L.shape[1]
        if self.R.shape[1] != r or self.V.shape[1] != r:
            raise ValueError("factor matrices must share a common column count")
        if self.S.shape != (r, r, r):
            raise ValueError(f"core must be ({r},{r},{r}), got {self.S.shape}")
        if r > min(self.dims):
            raise ValueError(f"rank {r} exceeds min tensor dimension {min(self.dims)}")

    @property
    def rank(self) -> int:
        return self.L.shape[1]

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.L.shape[0], self.R.shape[0], self.V.shape[0])

    def copy(self) -> "TuckerFactors":
        return TuckerFactors(self.L.copy(), self.R.copy(), self.V.copy(), self.S.copy())


class SpectrumTriple(NamedTuple):
    """Leading singular values of the three matricizations of a tensor."""

    mode1: np.ndarray
    mode2: np.ndarray
    mode3: np.ndarray


class TruncatedSVD(NamedTuple):
    U: np.ndarray
    sigma: np.ndarray
    Wh: np.ndarray


_TRANSPOSE = {1: (0, 2, 1), 2: (1, 2, 0), 3: (2, 1, 0)}


def _check_mode(mode: int) -> None:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")


def matricize(T: np.ndarray, mode: int) -> np.ndarray:
    """Unfold an order-3 tensor along `mode` (see module docstring for layout)."""
    _check_mode(mode)
    if T.ndim != 3:
        raise ValueError(f"expected an order-3 array, got ndim={T.ndim}")
    perm = _TRANSPOSE[mode]
    return np.ascontiguousarray(T.transpose(perm)).reshape(T.shape[mode - 1], -1)


def dematricize(M: np.ndarray, mode: int, dims: tuple[int, int, int]) -> np.ndarray:
    """Exact inverse of :func:`matricize` for the given tensor dims."""
    _check_mode(mode)
    n1, n2, s = dims
    if M.shape != {1: (n1, n2 * s), 2: (n2, n1 * s), 3: (s, n1 * n2)}[mode]:
        raise ValueError(f"matrix shape {M.shape} inconsistent with dims {dims} in mode {mode}")
    perm = _TRANSPOSE[mode]
    shape = tuple(dims[p] for p in perm)
    # transpose axes of the permuted tensor back to (i1, i2, i3) order
    inv = np.argsort(perm)
    return M.reshape(shape).transpose(inv)


def mode_product(T: np.ndarray, M: np.ndarray, mode: int) -> np.ndarray:
    """Contract `mode` of T against the columns of M: (T x_mode M)."""
    _check_mode(mode)
    if M.shape[1] != T.shape[mode - 1]:
        raise ValueError(
            f"mode-{mode} product: matrix has {M.shape[1]} columns, "
            f"tensor dimension is {T.shape[mode - 1]}"
        )
    axis = mode - 1
    out = np.tensordot(M, T, axes=([1], [axis]))
    # tensordot puts the new axis first; restore tensor order
    return np.moveaxis(out, 0, axis)


def multi_mode_product(
    T: np.ndarray,
    A: np.ndarray | None = None,
    B: np.ndarray | None = None,
    C: np.ndarray | None = None,
) -> np.ndarray:
    """(A, B, C) . T with None meaning identity on that mode."""
    out = T
    if A is not None:
        out = mode_product(out, A, 1)
    if B is not None:
        out = mode_product(out, B, 2)
    if C is not None:
        out = mode_product(out, C, 3)
    return out


def assemble(F: TuckerFactors) -> np.ndarray:
    """Materialize the dense tensor S x1 L x2 R x3 V."""
    return multi_mode_product(F.S, F.L, F.R, F.V)


def frob_inner(T1: np.ndarray, T2: np.ndarray) -> complex:
    """<T1, T2> = sum(conj(T1) * T2), conjugate-linear in the first argument."""
    return complex(np.vdot(T1, T2))


def top_r_svd(M: np.ndarray, r: int) -> TruncatedSVD:
    """Top-r singular triplets of a dense matrix.

    Returns (U, sigma, Wh) with U of orthonormal columns spanning the dominant
    left singular subspace and sigma nonincreasing.
    """
    if r > min(M.shape):
        raise ValueError(f"rank {r} exceeds min(M.shape) = {min(M.shape)}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    U, sig, Wh = np.linalg.svd(M, full_matrices=False)
    return TruncatedSVD(U[:, :r], sig[:r], Wh[:r, :])


def hosvd(T: np.ndarray, r: int) -> TuckerFactors:
    """Rank-(r,r,r) truncated higher-order SVD of a dense order-3 tensor."""
    if r > min(T.shape):
        raise ValueError(f"rank {r} exceeds min tensor dimension {min(T.shape)}")
    L = top_r_svd(matricize(T, 1), r).U
    R = top_r_svd(matricize(T, 2), r).U
    V = top_r_svd(matricize(T, 3), r).U
    S = multi_mode_product(T, L.conj().T, R.conj().T, V.conj().T)
    return TuckerFactors(L, R, V, S)


def mode_spectra(T: np.ndarray, r: int) -> SpectrumTriple:
    """Leading r singular values of each matricization."""
    vals = []
    for mode in (1, 2, 3):
        sig = np.linalg.svd(matricize(T, mode), compute_uv=False)
        vals.append(sig[:r])
    return SpectrumTriple(*vals)


def solve_hpd(
    G: np.ndarray,
    B: np.ndarray,
    name: str = "gram",
    cond_limit: float = 1e12,
    herm_tol: float = 1e-10,
) -> np.ndarray:
    """Solve G X = B for Hermitian positive-definite G via Cholesky.

    Raises IllConditionedGramError (naming `name`) when the eigenvalue-based
    condition estimate exceeds `cond_limit`; no silent regularization.
    """
    if G.shape[0] != G.shape[1]:
        raise ValueError(f"G must be square, got {G.shape}")
    scale = np.abs(G).max()
    if scale == 0:
        raise IllConditionedGramError(name, np.inf)
    if np.abs(G - G.conj().T).max() > herm_tol * scale:
        raise ValueError(f"matrix for factor '{name}' is not Hermitian to tolerance")
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 0 or ev[-1] / ev[0] > cond_limit:
        cond = np.inf if ev[0] <= 0 else ev[-1] / ev[0]
        raise IllConditionedGramError(name, cond)
    c, low = scipy.linalg.cho_factor(G, lower=True, check_finite=False)
    return scipy.linalg.cho_solve((c, low), B, check_finite=False)
