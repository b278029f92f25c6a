"""Hankel lifting and sampling operators.

An s x n signal matrix X is lifted to an n1 x n2 x s tensor whose slice k
carries X(k, .) along constant skew-diagonals: [H(X)](i, j, k) = X(k, i+j).
The skew-diagonal a of an n1 x n2 matrix has w_a cells; the reweighting D
scales column a of a signal matrix by sqrt(w_a), and the normalized lift
G = H o D^{-1} is an isometry (G* G = I) onto weighted-Hankel tensors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class HankelSpace:
    """Dimensions of the lifted domain plus precomputed skew-diagonal weights."""

    n1: int
    n2: int
    s: int
    n: int = field(init=False)
    weights: np.ndarray = field(init=False)  # integer counts w_a, a in [n]
    sqrt_w: np.ndarray = field(init=False)

    def __post_init__(self):
        if min(self.n1, self.n2, self.s) < 1:
            raise ValueError("all dimensions must be >= 1")
        n = self.n1 + self.n2 - 1
        a = np.arange(n)
        w = np.minimum.reduce([a + 1, n - a, np.full(n, min(self.n1, self.n2))])
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sqrt_w", np.sqrt(w.astype(float)))

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.s)

    @property
    def c_s(self) -> float:
        return max(self.n / self.n1, self.n / self.n2)


def make_space(n1: int, n2: int, s: int) -> HankelSpace:
    return HankelSpace(n1, n2, s)


def split_n(n: int) -> tuple[int, int]:
    """Balanced pencil split n = n1 + n2 - 1 with n1 = ceil((n+1)/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    n1 = (n + 2) // 2
    return n1, n + 1 - n1


def default_space(n: int, s: int) -> HankelSpace:
    n1, n2 = split_n(n)
    return make_space(n1, n2, s)


def _check_signal_shape(X: np.ndarray, space: HankelSpace) -> None:
    if X.shape != (space.s, space.n):
        raise ValueError(f"expected signal matrix of shape ({space.s}, {space.n}), got {X.shape}")


def lift_H(X: np.ndarray, space: HankelSpace) -> np.ndarray:
    """Unnormalized Hankel lift: out[i, j, k] = X(k, i+j)."""
    _check_signal_shape(X, space)
    a = np.arange(space.n1)[:, None] + np.arange(space.n2)[None, :]
    return np.ascontiguousarray(X[:, a].transpose(1, 2, 0))


def lift_G(X: np.ndarray, space: HankelSpace) -> np.ndarray:
    """Normalized lift G(X) = H(D^{-1} X): out[i, j, k] = X(k, i+j) / sqrt(w_{i+j})."""
    _check_signal_shape(X, space)
    return lift_H(X / space.sqrt_w, space)


def adjoint_G(T: np.ndarray, space: HankelSpace) -> np.ndarray:
    """Adjoint of the normalized lift: out[k, a] = sum_{i+j=a} T(i,j,k) / sqrt(w_a)."""
    if T.shape[:2] != (space.n1, space.n2):
        raise ValueError(f"tensor shape {T.shape} does not match space {space.dims}")
    s3 = T.shape[2]
    aflat = (np.arange(space.n1)[:, None] + np.arange(space.n2)[None, :]).ravel()
    acc = np.zeros((space.n, s3), dtype=np.result_type(T, complex))
    np.add.at(acc, aflat, T.reshape(space.n1 * space.n2, s3))
    return (acc / space.sqrt_w[:, None]).T


def weight_D(X: np.ndarray, space: HankelSpace, direction: str = "forward") -> np.ndarray:
    """Column reweighting by sqrt(w_a) ("forward") or 1/sqrt(w_a) ("inverse")."""
    _check_signal_shape(X, space)
    if direction == "forward":
        return X * space.sqrt_w
    if direction == "inverse":
        return X / space.sqrt_w
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def sample_observations(
    space: HankelSpace,
    m: int,
    mode: str = "without_replacement",
    rng_seed: int | np.random.Generator = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw m sample coordinates (k, a) from [s] x [n], uniformly.

    "with_replacement" draws i.i.d. pairs; "without_replacement" draws a
    uniform m-subset. Deterministic for a fixed seed.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    total = space.s * space.n
    if m < 1:
        raise ValueError("m must be >= 1")
    if mode == "with_replacement":
        flat = rng.integers(0, total, size=m)
    elif mode == "without_replacement":
        if m > total:
            raise ValueError(f"m = {m} exceeds the {total} available cells")
        flat = rng.choice(total, size=m, replace=False)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return (flat // space.n).astype(np.intp), (flat % space.n).astype(np.intp)


@dataclass(eq=False)
class ObservationSet:
    """Sampled cells of an s x n matrix with their observed values.

    Duplicate coordinates are allowed (with-replacement model) and accumulate
    additively in the sampling projector. The unique-cell structure backing
    the sparse projector is precomputed once.
    """

    space: HankelSpace
    rows: np.ndarray  # k indices, one per sample
    cols: np.ndarray  # a indices, one per sample
    values: np.ndarray  # observed entries, aligned with (rows, cols)
    with_replacement: bool = False

    def __post_init__(self):
        if not (len(self.rows) == len(self.cols) == len(self.values)):
            raise ValueError("rows, cols and values must have equal length")
        if len(self.rows) == 0:
            raise ValueError("observation set must contain at least one sample")
        if self.rows.min() < 0 or self.rows.max() >= self.space.s:
            raise ValueError("measurement index out of range")
        if self.cols.min() < 0 or self.cols.max() >= self.space.n:
            raise ValueError("time index out of range")
        flat = self.rows * self.space.n + self.cols
        order = np.argsort(flat, kind="stable")
        uniq, first, counts = np.unique(flat[order], return_index=True, return_counts=True)
        self._uk = (uniq // self.space.n).astype(np.intp)
        self._ua = (uniq % self.space.n).astype(np.intp)
        self._counts = counts.astype(float)
        self._uvalues = self.values[order][first]
        if not self.with_replacement and len(uniq) != len(flat):
            raise ValueError("duplicate samples present in without-replacement mode")
        # CSR template (rows sorted, then cols): per-iteration projections only
        # swap the data vector.
        self._indptr = np.concatenate(([0], np.cumsum(np.bincount(self._uk, minlength=self.space.s))))
        self._indices = self._ua

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def p(self) -> float:
        return self.m / (self.space.s * self.space.n)

    @property
    def unique_cells(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(k, a, multiplicity, value) over distinct observed cells."""
        return self._uk, self._ua, self._counts, self._uvalues

    def csr_from_cell_values(self, cell_values: np.ndarray) -> sp.csr_matrix:
        """Sparse s x n matrix holding `cell_values` on the distinct cells."""
        return sp.csr_matrix(
            (cell_values, self._indices, self._indptr), shape=(self.space.s, self.space.n)
        )

    def dense_projection(self) -> np.ndarray:
        """Dense P_Omega applied to the stored values (multiplicity-weighted)."""
        out = np.zeros((self.space.s, self.space.n), dtype=complex)
        out[self._uk, self._ua] = self._counts * self._uvalues
        return out


def observe(
    Y: np.ndarray,
    space: HankelSpace,
    m: int | None = None,
    mode: str = "without_replacement",
    rng_seed: int | np.random.Generator = 0,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
) -> ObservationSet:
    """Sample coordinates (or use the given ones) and record the entries of Y."""
    _check_signal_shape(Y, space)
    if rows is None or cols is None:
        if m is None:
            raise ValueError("either m or explicit (rows, cols) must be given")
        rows, cols = sample_observations(space, m, mode, rng_seed)
    return ObservationSet(space, rows, cols, Y[rows, cols], mode == "with_replacement")


def project_obs(X: np.ndarray, obs: ObservationSet) -> sp.csr_matrix:
    """P_Omega(X): entries of X on the observed cells, duplicates accumulating."""
    _check_signal_shape(X, obs.space)
    uk, ua, counts, _ = obs.unique_cells
    return obs.csr_from_cell_values(counts * X[uk, ua])
