"""Dense matrix containers, masks, and the elementary operators everything else builds on.

All matrices are plain 2-D float64 numpy arrays. The helpers here validate
shapes/finiteness, implement the constant-shift and mean operators, the four
matrix norms, and an SVD wrapper with a fixed sign convention so that repeated
runs produce identical factorizations.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NumericalError(RuntimeError):
    """A numerical routine (SVD, iterative solver) failed to converge."""


def as_matrix(a, name="matrix"):
    """Validate `a` as a finite 2-D float64 array and return it (copies only if needed)."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be 2-D with at least one row and one column, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def shift(M, c):
    """Add the constant c to every entry of M.

    shift(M, -c) inverts shift(M, c); shift(M, 0) returns M unchanged in value.
    """
    M = as_matrix(M)
    c = float(c)
    if not np.isfinite(c):
        raise ValueError("shift constant must be finite")
    return M + c


def mean_value(M):
    """Arithmetic mean of all entries of M."""
    return float(np.mean(as_matrix(M)))


def singular_values(M):
    """Singular values of M, non-increasing, via LAPACK with a gesvd fallback."""
    M = as_matrix(M)
    try:
        return np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError:
        pass
    try:
        return scipy.linalg.svd(M, compute_uv=False, lapack_driver="gesvd")
    except Exception as exc:  # pragma: no cover - requires a pathological matrix
        raise NumericalError(f"SVD of {M.shape} matrix failed to converge: {exc}") from exc


@dataclass(frozen=True)
class MatrixNorms:
    frobenius: float
    nuclear: float
    spectral: float
    entry_max: float


def norms(M):
    """Frobenius, nuclear, spectral, and entrywise-max norms of M.

    nuclear is the sum of singular values and spectral the largest one, so
    spectral <= frobenius <= nuclear always holds.
    """
    M = as_matrix(M)
    s = singular_values(M)
    return MatrixNorms(
        frobenius=float(np.linalg.norm(M)),
        nuclear=float(s.sum()),
        spectral=float(s[0]) if s.size else 0.0,
        entry_max=float(np.abs(M).max()),
    )


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD M = left @ diag(singulars) @ right.T with k = min(n1, n2).

    Columns of `left` (n1 x k) and `right` (n2 x k) are orthonormal, the
    singular values are sorted non-increasing, and the sign of each singular
    pair is fixed so the first nonzero entry of each left singular vector is
    non-negative.
    """

    left: np.ndarray
    singulars: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        return (self.left * self.singulars) @ self.right.T


def svd(M):
    """Thin SVD of M with the fixed sign convention; raises NumericalError on failure."""
    M = as_matrix(M)
    try:
        u, s, vh = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except Exception as exc:  # pragma: no cover - requires a pathological matrix
            raise NumericalError(f"SVD of {M.shape} matrix failed to converge: {exc}") from exc
    v = vh.T.copy()
    u = u.copy()
    # sign convention: first nonzero entry of each left singular vector >= 0
    for k in range(s.size):
        col = u[:, k]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0.0:
            u[:, k] = -col
            v[:, k] = -v[:, k]
    u.setflags(write=False)
    s.setflags(write=False)
    v.setflags(write=False)
    return SvdResult(left=u, singulars=s, right=v)


def _as_mask_bool(mask, shape):
    W = np.asarray(mask)
    if W.shape != shape:
        raise ValueError(f"mask shape {W.shape} does not match values shape {shape}")
    if W.dtype == bool:
        return W.copy()
    Wf = np.asarray(W, dtype=np.float64)
    if not np.all((Wf == 0.0) | (Wf == 1.0)):
        raise ValueError("mask entries must be 0 or 1")
    return Wf == 1.0


class ObservedData:
    """A value matrix X paired with a 0/1 observation mask W.

    Entries of X at unobserved positions are stored as 0 and are never read by
    any computation in this package; only the observed entries matter. Per-row
    and per-column lists of observed positions are precomputed once so that
    pairwise loops cost O(observed pairs). Instances are immutable.
    """

    def __init__(self, values, mask):
        X = as_matrix(values, "values")
        Wb = _as_mask_bool(mask, X.shape)
        self.n1, self.n2 = X.shape
        self.values = np.where(Wb, X, 0.0)
        self.mask = Wb.astype(np.float64)
        self.mask_bool = Wb
        self.row_indices = tuple(np.flatnonzero(Wb[i, :]) for i in range(self.n1))
        self.col_indices = tuple(np.flatnonzero(Wb[:, j]) for j in range(self.n2))
        self.n_observed = int(Wb.sum())
        for a in (self.values, self.mask, self.mask_bool, *self.row_indices, *self.col_indices):
            a.setflags(write=False)

    @property
    def shape(self):
        return (self.n1, self.n2)

    def observed_values(self):
        """The observed entries of X as a flat array (row-major order)."""
        return self.values[self.mask_bool]

    def observed_positions(self):
        """(rows, cols) index arrays of the observed entries, row-major order."""
        return np.nonzero(self.mask_bool)
