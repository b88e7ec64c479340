"""Pairwise comparison loss over rows and columns of a partially observed matrix.

For two observed entries x1, x2 with model values m1, m2 the pair term is

    l(x1, x2, m1, m2) = log(1 + exp(-(x1 - x2)(m1 - m2))),

a logistic rank penalty that agrees with the data when larger observations get
larger model values. The full loss sums l over all ordered pairs of observed
entries sharing a row (scaled by 1/n2) plus all ordered pairs sharing a column
(scaled by 1/n1), equal indices included, so the value is shift-invariant:
adding a constant to M leaves it unchanged. The module also provides the exact
gradient, a curvature semi-norm with matching pair weights, and the Lipschitz
constants of the gradient derived from the observed value range and the
row/column observation counts.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import ObservedData, as_matrix

# elements per 3-D broadcast temp before chunking over rows kicks in (~32 MB of f64)
_CHUNK_BUDGET = 1 << 22

LOG2 = math.log(2.0)


def pair_loss(x1, x2, m1, m2):
    """Stable log(1 + exp(-(x1 - x2)(m1 - m2))); equals log 2 when either pair ties."""
    for v in (x1, x2, m1, m2):
        if not math.isfinite(v):
            raise ValueError("pair_loss arguments must be finite")
    t = (x1 - x2) * (m1 - m2)
    return max(-t, 0.0) + math.log1p(math.exp(-abs(t)))


def pair_weight(x1, x2, alpha):
    """Curvature weight of a pair: (x1-x2)^2 / (4 + 2 e^{2a d} + 2 e^{-2a d}), d = x1-x2.

    Lower-bounds half the second derivative of the pair loss when model values
    stay in [-alpha, alpha]. Evaluated with non-positive exponents only, so it
    never overflows; zero exactly when x1 == x2.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    d = abs(x1 - x2)
    e1 = math.exp(-2.0 * alpha * d)
    return d * d * e1 / (4.0 * e1 + 2.0 * e1 * e1 + 2.0)


class _PaddedAxis:
    """Observed entries of each row gathered into a padded (n, kmax) layout.

    idx[i, :k_i] are the observed column positions of row i, pad[i] marks the
    real slots, xpad holds the observed values (0 in padding), and flat holds
    row-major flat indices into the full matrix for scatter-adds.
    """

    def __init__(self, values, mask_bool):
        n, m = values.shape
        counts = mask_bool.sum(axis=1).astype(np.int64)
        kmax = int(counts.max()) if n else 0
        self.n, self.m, self.kmax = n, m, kmax
        self.idx = np.zeros((n, max(kmax, 1)), dtype=np.int64)
        self.pad = np.zeros((n, max(kmax, 1)), dtype=np.float64)
        for i in range(n):
            ji = np.flatnonzero(mask_bool[i, :])
            self.idx[i, : ji.size] = ji
            self.pad[i, : ji.size] = 1.0
        self.xpad = np.take_along_axis(values, self.idx, axis=1) * self.pad
        self.flat = (np.arange(n, dtype=np.int64)[:, None] * m + self.idx)
        self.chunk = max(1, _CHUNK_BUDGET // max(1, kmax * kmax))

    def gather(self, M):
        return np.take_along_axis(M, self.idx, axis=1)

    def slices(self):
        for lo in range(0, self.n, self.chunk):
            yield slice(lo, min(lo + self.chunk, self.n))


@dataclass(frozen=True)
class LipschitzInfo:
    """Gradient smoothness constants: l_f = l_x * l_w / 2.

    l_x is the squared spread of the observed values between the two stated
    empirical quantiles (exact range for quantiles 0 and 1); l_w is the largest
    column observation count over n1 plus the largest row count over n2 and is
    always exact.
    """

    l_x: float
    l_w: float
    l_f: float
    quantile_lo: float
    quantile_hi: float


class LossContext:
    """Observation pattern plus the box bound alpha feeding the pairwise loss.

    Precomputes padded per-row and per-column views of the observed entries so
    loss/gradient evaluations are vectorized over all pairs at once.
    """

    def __init__(self, data: ObservedData, alpha: float):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.data = data
        self.alpha = float(alpha)
        self._rows = _PaddedAxis(data.values, data.mask_bool)
        self._cols = _PaddedAxis(data.values.T, data.mask_bool.T)

    @property
    def shape(self):
        return self.data.shape

    @property
    def row_index_lists(self):
        return self.data.row_indices

    @property
    def col_index_lists(self):
        return self.data.col_indices

    def _check(self, M, name="M"):
        M = as_matrix(M, name)
        if M.shape != self.data.shape:
            raise ValueError(f"{name} shape {M.shape} does not match data shape {self.data.shape}")
        return M


def _axis_loss(ax: _PaddedAxis, Mt):
    total = 0.0
    mpad = ax.gather(Mt)
    for sl in ax.slices():
        x = ax.xpad[sl]
        m = mpad[sl]
        p = ax.pad[sl]
        dx = x[:, :, None] - x[:, None, :]
        t = dx * (m[:, :, None] - m[:, None, :])
        wp = p[:, :, None] * p[:, None, :]
        total += float((np.logaddexp(0.0, -t) * wp).sum())
    return total


def loss(ctx: LossContext, M):
    """Row/column pairwise loss of M on the observed entries.

    Sums the pair term over all ordered same-row index pairs (including equal
    ones, each contributing log 2) weighted by 1/n2, plus the same-column sum
    weighted by 1/n1.
    """
    M = ctx._check(M)
    n1, n2 = ctx.shape
    return _axis_loss(ctx._rows, M) / n2 + _axis_loss(ctx._cols, M.T) / n1


def _axis_grad(ax: _PaddedAxis, Mt):
    out = np.zeros(ax.n * ax.m)
    mpad = ax.gather(Mt)
    for sl in ax.slices():
        x = ax.xpad[sl]
        m = mpad[sl]
        p = ax.pad[sl]
        dx = x[:, :, None] - x[:, None, :]
        t = dx * (m[:, :, None] - m[:, None, :])
        wp = p[:, :, None] * p[:, None, :]
        contrib = (-dx * expit(-t) * wp).sum(axis=2)
        out += np.bincount(ax.flat[sl].ravel(), weights=contrib.ravel(), minlength=out.size)
    return out.reshape(ax.n, ax.m)


def gradient(ctx: LossContext, M):
    """Exact gradient of loss() at M; zero at unobserved entries.

    Entry (i, j) with W_ij = 1 receives (2/n2) * sum over observed row mates j2
    of -(X_ij - X_ij2) * sigmoid(-(X_ij - X_ij2)(m_ij - m_ij2)), plus the same
    over column mates scaled by 2/n1. The factor 2 counts each ordered pair
    twice; pairs with equal observed values contribute exactly zero.
    """
    M = ctx._check(M)
    n1, n2 = ctx.shape
    g_rows = _axis_grad(ctx._rows, M)
    g_cols = _axis_grad(ctx._cols, M.T)
    return (2.0 / n2) * g_rows + (2.0 / n1) * g_cols.T


def _axis_seminorm(ax: _PaddedAxis, Dt, alpha):
    total = 0.0
    dpad = ax.gather(Dt)
    for sl in ax.slices():
        x = ax.xpad[sl]
        d = dpad[sl]
        p = ax.pad[sl]
        dx = x[:, :, None] - x[:, None, :]
        dd = d[:, :, None] - d[:, None, :]
        wp = p[:, :, None] * p[:, None, :]
        e1 = np.exp(-2.0 * alpha * np.abs(dx))
        wgt = dx * dx * e1 / (4.0 * e1 + 2.0 * e1 * e1 + 2.0)
        total += float((dd * dd * wgt * wp).sum())
    return total


def sample_seminorm_sq(ctx: LossContext, D):
    """Squared curvature semi-norm of D: pair-weighted within-row and within-column
    squared differences over ordered observed pairs. Zero on constant matrices."""
    D = ctx._check(D, "D")
    n1, n2 = ctx.shape
    return (
        _axis_seminorm(ctx._rows, D, ctx.alpha) / n2
        + _axis_seminorm(ctx._cols, D.T, ctx.alpha) / n1
    )


def lipschitz(ctx: LossContext, quantile_lo=0.0, quantile_hi=1.0):
    """Lipschitz constants of the loss gradient.

    l_x is the squared gap between the stated empirical quantiles (linear
    interpolation) of the observed values; with (0, 1) this is the exact
    squared range. l_w is exact regardless of the quantiles. l_f = l_x*l_w/2.
    """
    if not (0.0 <= quantile_lo < quantile_hi <= 1.0):
        raise ValueError("need 0 <= quantile_lo < quantile_hi <= 1")
    data = ctx.data
    if data.n_observed == 0:
        raise ValueError("no observed entries")
    obs = data.observed_values()
    q_lo, q_hi = np.quantile(obs, [quantile_lo, quantile_hi])
    l_x = float((q_hi - q_lo) ** 2)
    l_w = float(data.mask.sum(axis=0).max() / data.n1 + data.mask.sum(axis=1).max() / data.n2)
    return LipschitzInfo(l_x=l_x, l_w=l_w, l_f=l_x * l_w / 2.0,
                         quantile_lo=float(quantile_lo), quantile_hi=float(quantile_hi))
