"""Estimation and ranking metrics, plus a squared-loss reference fit.

RMSE comes in a plain and a mean-corrected flavor (the latter removes the
constant shift the pairwise loss cannot see). The ranking metrics are
test-value-weighted expected percentile positions of the predictions within
their row, their column, or the whole matrix: 0 marks the highest prediction,
1 the lowest, ties take the midpoint, and 0.5 is chance level.
"""

from dataclasses import dataclass

import math

import numpy as np
from scipy.stats import rankdata

from .core import as_matrix
from .loss import LossContext
from .solver import SolverConfig, _run_prox_gradient


class UndefinedMetricError(ValueError):
    """Raised when the ranking weights sum to zero, leaving the metric undefined."""


@dataclass(frozen=True)
class TestSet:
    """Held-out entries as parallel (row, col, value) arrays."""

    __test__ = False  # not a pytest class despite the name

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @classmethod
    def from_triplets(cls, triplets):
        triplets = list(triplets)
        rows = np.array([t[0] for t in triplets], dtype=np.int64)
        cols = np.array([t[1] for t in triplets], dtype=np.int64)
        values = np.array([t[2] for t in triplets], dtype=np.float64)
        return cls(rows=rows, cols=cols, values=values)

    def __len__(self):
        return self.rows.size


@dataclass(frozen=True)
class EvalReport:
    """All five metrics for one prediction matrix; fields are None when the
    corresponding input (truth matrix, usable test weights) was unavailable."""

    rmse_plain: float | None
    rmse_centered: float | None
    rank1: float | None
    rank2: float | None
    rank3: float | None
    n_test: int


def rmse(m_hat, m_true, centered=False):
    """Root mean squared entry error; the centered variant first removes the
    mean of the difference, making it blind to constant shifts."""
    m_hat = as_matrix(m_hat, "m_hat")
    m_true = as_matrix(m_true, "m_true")
    if m_hat.shape != m_true.shape:
        raise ValueError(f"shape mismatch: {m_hat.shape} vs {m_true.shape}")
    diff = m_hat - m_true
    if centered:
        diff = diff - diff.mean()
    return float(np.linalg.norm(diff)) / math.sqrt(diff.size)


def _percentile_desc(ranks_asc, n):
    # average ascending rank -> descending percentile in [0, 1]
    if n <= 1:
        return np.full_like(np.asarray(ranks_asc, dtype=np.float64), 0.5)
    return (n - ranks_asc) / (n - 1.0)


def rank_metrics(m_hat, test: TestSet):
    """(row-wise, column-wise, overall) expected percentile rankings.

    Each test entry contributes its prediction's percentile position weighted
    by the test value; percentile = (number strictly greater + half the ties
    among the others) / (count - 1), so the unique maximum scores 0, the
    unique minimum 1, and a constant matrix 0.5 everywhere.
    """
    m_hat = as_matrix(m_hat, "m_hat")
    n1, n2 = m_hat.shape
    if len(test) == 0:
        raise UndefinedMetricError("empty test set")
    if test.rows.min() < 0 or test.rows.max() >= n1 or test.cols.min() < 0 or test.cols.max() >= n2:
        raise ValueError("test set indices out of range")
    total = float(test.values.sum())
    if total <= 0:
        raise UndefinedMetricError("test values sum to zero; ranking weights are undefined")

    pct_row = _percentile_desc(rankdata(m_hat, axis=1, method="average"), n2)
    pct_col = _percentile_desc(rankdata(m_hat, axis=0, method="average"), n1)
    pct_all = _percentile_desc(
        rankdata(m_hat.ravel(), method="average"), n1 * n2
    ).reshape(n1, n2)

    w = test.values
    at = (test.rows, test.cols)
    rank1 = float((w * pct_row[at]).sum() / total)
    rank2 = float((w * pct_col[at]).sum() / total)
    rank3 = float((w * pct_all[at]).sum() / total)
    return rank1, rank2, rank3


def fit_baseline_sq(ctx: LossContext, cfg: SolverConfig, M0=None):
    """Reference fit: (1/2) sum_ij W_ij (X_ij - m_ij)^2 + lam * ||M||_* with the
    same prox machinery and stopping rule as the pairwise fit.

    The gradient is W * (M - X) with Lipschitz constant 1; mu defaults to 1.
    """
    X = ctx.data.values
    W = ctx.data.mask
    if M0 is None:
        M0 = np.zeros(ctx.shape)

    def value_fn(M):
        diff = W * (M - X)
        return 0.5 * float((diff * diff).sum())

    def grad_fn(M):
        return W * (M - X)

    mu = cfg.mu if cfg.mu is not None else 1.0
    return _run_prox_gradient(value_fn, grad_fn, cfg, M0, mu, 1.0)


def evaluate_report(m_hat, test=None, m_true=None):
    """Assemble an EvalReport from whatever inputs are available."""
    rmse_plain = rmse_centered = None
    if m_true is not None:
        rmse_plain = rmse(m_hat, m_true, centered=False)
        rmse_centered = rmse(m_hat, m_true, centered=True)
    rank1 = rank2 = rank3 = None
    n_test = 0
    if test is not None:
        n_test = len(test)
        try:
            rank1, rank2, rank3 = rank_metrics(m_hat, test)
        except UndefinedMetricError:
            pass
    return EvalReport(
        rmse_plain=rmse_plain,
        rmse_centered=rmse_centered,
        rank1=rank1,
        rank2=rank2,
        rank3=rank3,
        n_test=n_test,
    )
