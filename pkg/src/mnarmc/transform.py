"""Constant-shift identification via nuclear-norm minimization.

Adding a constant to every entry of the parameter matrix leaves the pairwise
loss unchanged, so among all shifted copies M + c we single out the one with
the smallest nuclear norm:

    c_hat = argmin_c || M + c ||_*      (one-dimensional, convex, coercive)

located by golden-section search on a bracket certified to contain the
minimizer. The companion diagnostic measures how well a matrix's leading
singular subspaces separate from the all-ones direction, which governs how
sharply the minimizing shift is pinned down.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import NumericalError, as_matrix, mean_value, singular_values, svd

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_MAX_GOLDEN_ITER = 400


@dataclass(frozen=True)
class TransformResult:
    """Minimizing shift c_hat, the shifted matrix, its nuclear norm, the search
    bracket, and how many nuclear-norm evaluations the search spent."""

    c_hat: float
    transformed: np.ndarray
    nuclear_at_c: float
    bracket: tuple
    evals: int


def identify_shift(M, tol_c=None):
    """Find the constant shift minimizing the nuclear norm of M + c.

    The bracket (-B, B) with B = 2 ||M||_* / sqrt(n1 n2) + |mean(M)| always
    contains a minimizer: a rank-one argument shows h(c) >= |c| sqrt(n1 n2) -
    ||M||_* exceeds h(0) outside it. Golden-section search narrows the bracket
    to width tol_c (default 1e-8 * (1 + max|M|)) and returns its midpoint; for
    a flat minimizing interval that is the search's natural limit point.
    """
    M = as_matrix(M)
    n1, n2 = M.shape
    if tol_c is None:
        tol_c = 1e-8 * (1.0 + float(np.abs(M).max()))
    if tol_c <= 0:
        raise ValueError("tol_c must be positive")

    evals = 0

    def h(c):
        nonlocal evals
        evals += 1
        return float(singular_values(M + c).sum())

    h0 = h(0.0)
    scale = math.sqrt(n1 * n2)
    B = 2.0 * h0 / scale + abs(mean_value(M))
    if B == 0.0:
        # only possible for the zero matrix, whose minimizing shift is 0
        return TransformResult(0.0, M.copy(), h0, (0.0, 0.0), evals)

    for _ in range(60):
        if h(-B) >= h0 and h(B) >= h0:
            break
        B *= 2.0
    else:
        raise NumericalError("could not bracket the nuclear-norm minimizing shift")

    a, b = -B, B
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(_MAX_GOLDEN_ITER):
        if b - a <= tol_c:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = h(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = h(d)
    c_hat = 0.5 * (a + b)
    return TransformResult(
        c_hat=c_hat,
        transformed=M + c_hat,
        nuclear_at_c=h(c_hat),
        bracket=(-B, B),
        evals=evals,
    )


def b_diagnostic(M_star, d, tol_c=None):
    """Subspace/ones separation diagnostic of the shift-identified matrix.

    With U, V the top-d left/right singular vectors of the shift-identified
    copy of M_star, returns

        ||(I - U U^T) 1|| * ||(I - V V^T) 1|| / sqrt(n1 n2)
            - sqrt(n1 n2) * |mean(U V^T)|.

    May be non-positive, in which case it certifies nothing; the value is
    reported as-is.
    """
    M_star = as_matrix(M_star, "M_star")
    n1, n2 = M_star.shape
    if not (1 <= d <= min(n1, n2)):
        raise ValueError(f"d must be in [1, {min(n1, n2)}], got {d}")
    T = identify_shift(M_star, tol_c=tol_c).transformed
    r = svd(T)
    U = r.left[:, :d]
    V = r.right[:, :d]
    ones1 = np.ones(n1)
    ones2 = np.ones(n2)
    res1 = ones1 - U @ (U.T @ ones1)
    res2 = ones2 - V @ (V.T @ ones2)
    scale = math.sqrt(n1 * n2)
    mean_uv = float((U.T @ ones1) @ (V.T @ ones2)) / (n1 * n2)
    return float(np.linalg.norm(res1) * np.linalg.norm(res2)) / scale - scale * abs(mean_uv)
