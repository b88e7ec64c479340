"""Singular-value soft-thresholding, box clipping, and their combination.

The box-constrained nuclear-norm proximal operator

    argmin_{|X|_inf <= alpha}  (1/2) ||X - A||_F^2 + lam * ||X||_*

reduces to plain singular-value thresholding whenever the thresholded matrix
already fits inside the box; otherwise a two-block ADMM alternates between the
unconstrained thresholding step and the box projection.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import NumericalError, as_matrix, svd


@dataclass
class AdmmConfig:
    """Step parameter, stopping tolerance, and iteration cap for the inner ADMM.

    tol=None resolves per call to 1e-7 * sqrt(n1*n2); beta is the standard
    unit step unless tuned.
    """

    beta: float = 1.0
    tol: float | None = None
    max_iter: int = 500

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def resolved_tol(self, shape):
        if self.tol is not None:
            return self.tol
        return 1e-7 * math.sqrt(shape[0] * shape[1])


@dataclass
class AdmmReport:
    iterations: int
    final_residual: float
    converged: bool


class WarmStart:
    """Carries (x2, h) between successive prox calls on nearby targets."""

    def __init__(self):
        self.x2 = None
        self.h = None


def svt(A, tau):
    """Soft-threshold the singular values of A by tau: sigma -> max(sigma - tau, 0)."""
    A = as_matrix(A, "A")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    r = svd(A)
    s = np.maximum(r.singulars - tau, 0.0)
    return (r.left * s) @ r.right.T


def clip(A, alpha):
    """Entrywise clamp of A to [-alpha, alpha]; identity when already inside."""
    A = as_matrix(A, "A")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return np.clip(A, -alpha, alpha)


def prox_nuclear_box(A, lam, alpha, cfg=None, warm=None, use_fast_path=True):
    """Box-constrained nuclear-norm prox of A; returns (X2, AdmmReport).

    With lam = 0 the answer is clip(A, alpha) exactly. If the thresholded
    matrix svt(A, lam) already satisfies the box bound it is returned directly
    (it solves the constrained problem exactly); set use_fast_path=False to
    force the ADMM loop regardless. The ADMM iteration is

        X1 <- svt((A + beta*X2 + H) / (1 + beta), lam / (1 + beta))
        X2 <- clip(X1 - H / beta, alpha)
        H  <- H - beta * (X1 - X2)

    stopping when max(|X1-X2|_F, |X1-X1_prev|_F, |X2-X2_prev|_F) < tol. The
    returned X2 satisfies the box bound exactly. A WarmStart object, when
    given, seeds X2 and H and is updated in place after a full ADMM run.
    """
    A = as_matrix(A, "A")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if cfg is None:
        cfg = AdmmConfig()
    tol = cfg.resolved_tol(A.shape)

    if lam == 0.0:
        return np.clip(A, -alpha, alpha), AdmmReport(iterations=0, final_residual=0.0, converged=True)

    if use_fast_path:
        Z = svt(A, lam)
        if np.abs(Z).max() <= alpha:
            return Z, AdmmReport(iterations=0, final_residual=0.0, converged=True)

    beta = cfg.beta
    x1 = A.copy()
    if warm is not None and warm.h is not None and warm.h.shape == A.shape:
        h = warm.h.copy()
        x2 = warm.x2.copy()
    else:
        h = np.zeros_like(A)
        x2 = np.clip(x1, -alpha, alpha)

    residual = math.inf
    iterations = 0
    converged = False
    thr = lam / (1.0 + beta)
    for iterations in range(1, cfg.max_iter + 1):
        x1_prev, x2_prev = x1, x2
        x1 = svt((A + beta * x2 + h) / (1.0 + beta), thr)
        x2 = np.clip(x1 - h / beta, -alpha, alpha)
        h = h - beta * (x1 - x2)
        if not np.all(np.isfinite(x1)):
            raise NumericalError(f"ADMM produced non-finite iterate at iteration {iterations}")
        residual = max(
            float(np.linalg.norm(x1 - x2)),
            float(np.linalg.norm(x1 - x1_prev)),
            float(np.linalg.norm(x2 - x2_prev)),
        )
        if residual < tol:
            converged = True
            break

    if warm is not None:
        warm.x2 = x2.copy()
        warm.h = h.copy()
    return x2, AdmmReport(iterations=iterations, final_residual=residual, converged=converged)


def _prox_with_inits(A, lam, alpha, cfg, x1_init, h_init):
    """ADMM run from explicit initial (X1, H); used to check init independence."""
    warm = WarmStart()
    warm.h = as_matrix(h_init, "h_init").copy()
    warm.x2 = np.clip(as_matrix(x1_init, "x1_init"), -alpha, alpha)
    return prox_nuclear_box(A, lam, alpha, cfg, warm=warm, use_fast_path=False)
