"""Outer optimization: proximal gradient descent and its momentum-accelerated variant.

Each iteration takes a gradient step on the smooth pairwise loss and applies
the box-constrained nuclear-norm prox:

    Y_k     = M_k - grad(M_k) / mu
    M_{k+1} = prox_{lam/mu, alpha}(Y_k)

stopping when the objective F_k = loss(M_k) + lam * ||M_k||_* changes by less
than the tolerance. The accelerated variant extrapolates with the classical
t-sequence t_1 = 1, t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 before the gradient
step; its objective need not decrease monotonically. With mu above the
gradient's Lipschitz constant the plain method decreases the objective by at
least (mu - l_f)/2 * ||M_k - M_{k+1}||_F^2 per step, which can be asserted at
runtime via check_descent.
"""

import dataclasses
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import as_matrix, singular_values
from .loss import LossContext, gradient, lipschitz, loss
from .prox import AdmmConfig, WarmStart, prox_nuclear_box


@dataclass
class SolverConfig:
    """Hyperparameters of the outer loop.

    mu=None resolves to max(l_f at the (0.05, 0.95) quantiles, 1.1); tol=None
    resolves to 1e-6 * (1 + |F_0|) once the initial objective is known.
    """

    lam: float
    alpha: float = 10.0
    mu: float | None = None
    tol: float | None = None
    max_iter: int = 100
    accelerate: bool = True
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    check_descent: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class SolverTrace:
    """Per-iteration history: objectives F_0, F_1, ... plus step norms,
    inner ADMM iteration counts, and wall times (one entry per outer step)."""

    objectives: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    admm_iters: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)


@dataclass
class FitResult:
    m_hat: np.ndarray
    converged: bool
    trace: SolverTrace
    mu: float
    tol: float


class DescentViolation(RuntimeError):
    """The guaranteed per-step objective decrease failed at some iteration."""

    def __init__(self, k, decrease, required):
        super().__init__(
            f"objective decrease {decrease:.6e} at iteration {k} is below the "
            f"guaranteed {required:.6e}"
        )
        self.k = k
        self.decrease = decrease
        self.required = required


def _fista_t_next(t):
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))


def objective(ctx: LossContext, M, lam):
    """loss(ctx, M) + lam * nuclear norm of M."""
    if lam < 0:
        raise ValueError("lam must be non-negative")
    return loss(ctx, M) + lam * float(singular_values(M).sum())


def _run_prox_gradient(value_fn, grad_fn, cfg: SolverConfig, M0, mu, l_f):
    """Shared iteration driver for the plain and accelerated methods.

    value_fn/grad_fn evaluate the smooth part and its gradient; mu is the
    resolved step parameter and l_f the exact Lipschitz constant used by the
    descent check.
    """
    M0 = as_matrix(M0, "M0")
    if np.abs(M0).max() > cfg.alpha:
        warnings.warn("initial matrix exceeds the box bound; clipping it", stacklevel=3)
        M0 = np.clip(M0, -cfg.alpha, cfg.alpha)

    lam, alpha = cfg.lam, cfg.alpha
    trace = SolverTrace()
    warm = WarmStart()
    admm_warned = False

    M = M0
    F = value_fn(M) + lam * float(singular_values(M).sum())
    trace.objectives.append(F)
    tol = cfg.tol if cfg.tol is not None else 1e-6 * (1.0 + abs(F))
    descent_tol = 1e-8 * (1.0 + abs(F))

    M_prev = M
    t_prev = 1.0
    converged = False
    for k in range(1, cfg.max_iter + 1):
        t_start = time.perf_counter()
        if cfg.accelerate and k >= 2:
            t_next = _fista_t_next(t_prev)
            gamma = (t_prev - 1.0) / t_next
            t_prev = t_next
            Z = M if gamma == 0.0 else M + gamma * (M - M_prev)
        else:
            Z = M
        Y = Z - grad_fn(Z) / mu
        M_next, report = prox_nuclear_box(Y, lam / mu, alpha, cfg.admm, warm=warm)
        if not report.converged and not admm_warned:
            warnings.warn(
                f"inner ADMM hit its iteration cap at outer step {k} "
                f"(residual {report.final_residual:.3e})",
                stacklevel=3,
            )
            admm_warned = True
        F_next = value_fn(M_next) + lam * float(singular_values(M_next).sum())

        trace.objectives.append(F_next)
        trace.step_norms.append(float(np.linalg.norm(M_next - M)))
        trace.admm_iters.append(report.iterations)
        trace.wall_times.append(time.perf_counter() - t_start)

        if cfg.check_descent and not cfg.accelerate and mu > l_f:
            required = 0.5 * (mu - l_f) * trace.step_norms[-1] ** 2
            if F - F_next < required - descent_tol:
                raise DescentViolation(k, F - F_next, required)

        M_prev = M
        M = M_next
        if abs(F - F_next) < tol:
            F = F_next
            converged = True
            break
        F = F_next

    return FitResult(m_hat=M, converged=converged, trace=trace, mu=mu, tol=tol)


def _resolve_mu(ctx, cfg):
    if cfg.mu is not None:
        return cfg.mu
    return max(lipschitz(ctx, 0.05, 0.95).l_f, 1.1)


def fit(ctx: LossContext, cfg: SolverConfig, M0=None):
    """Minimize loss(M) + lam * ||M||_* over the alpha-box from M0 (default zeros)."""
    if M0 is None:
        M0 = np.zeros(ctx.shape)
    mu = _resolve_mu(ctx, cfg)
    l_f = lipschitz(ctx, 0.0, 1.0).l_f
    if mu <= l_f:
        warnings.warn(
            f"step parameter mu={mu:.4g} is not above the gradient Lipschitz "
            f"constant l_f={l_f:.4g}; monotone descent is not guaranteed",
            stacklevel=2,
        )
    return _run_prox_gradient(lambda M: loss(ctx, M), lambda M: gradient(ctx, M), cfg, M0, mu, l_f)


def fit_pgd(ctx: LossContext, cfg: SolverConfig, M0=None):
    """Plain proximal gradient run (momentum disabled regardless of cfg.accelerate)."""
    if cfg.accelerate:
        cfg = dataclasses.replace(cfg, accelerate=False)
    return fit(ctx, cfg, M0)


def fit_fista(ctx: LossContext, cfg: SolverConfig, M0=None):
    """Accelerated run (momentum enabled regardless of cfg.accelerate)."""
    if not cfg.accelerate:
        cfg = dataclasses.replace(cfg, accelerate=True)
    return fit(ctx, cfg, M0)
