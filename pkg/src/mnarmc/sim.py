"""Synthetic low-rank ground truth with value-dependent (nonignorable) observation.

The ground truth is M = A @ B / sqrt(rank) with independent standard-normal
factors, so each entry has unit variance. Two data laws are provided:

    dgp1: X_ij ~ Bernoulli(sigmoid(m_ij))
    dgp2: X_ij = m_ij + standard normal noise

and each entry is then observed with probability

    P(W_ij = 1 | X_ij) = a_ij * sigmoid(mnar_scale * X_ij + mnar_offset),
    a_ij = 1 / (1 + frailty_coef * exp(Y_ij)),   Y_ij iid standard normal,

so the chance of seeing a value depends on the value itself (higher values are
seen more often) times an entry-specific frailty factor.

Randomness comes from numpy's PCG64 generator. A single seed is split into
four independent substreams, consumed in this fixed order: ground-truth
factors, X draws, frailty draws Y, observation uniforms. Components are
therefore reproducible in isolation (e.g. the ground truth of a spec can be
regenerated without touching the other streams).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .core import ObservedData

DGP1 = "dgp1"
DGP2 = "dgp2"


@dataclass(frozen=True)
class DgpSpec:
    """Shape, rank, data law, seed, and observation-law parameters of one design.

    mnar_offset=None resolves to -1 for dgp1 and 0 for dgp2.
    """

    n1: int
    n2: int
    dgp: str = DGP1
    rank: int = 3
    seed: int = 0
    mnar_scale: float = 2.0
    mnar_offset: float | None = None
    frailty_coef: float = 0.1

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be positive")
        if not (1 <= self.rank <= min(self.n1, self.n2)):
            raise ValueError(f"rank must be in [1, {min(self.n1, self.n2)}]")
        if self.dgp not in (DGP1, DGP2):
            raise ValueError(f"dgp must be {DGP1!r} or {DGP2!r}, got {self.dgp!r}")
        if self.frailty_coef < 0:
            raise ValueError("frailty_coef must be non-negative")

    @property
    def offset(self):
        if self.mnar_offset is not None:
            return self.mnar_offset
        return -1.0 if self.dgp == DGP1 else 0.0


@dataclass(frozen=True)
class SimInstance:
    m_true: np.ndarray
    data: ObservedData
    observed_fraction: float


def spawn_streams(seed):
    """The four independent generators derived from one seed.

    Returns a dict with keys 'truth', 'values', 'frailty', 'observation',
    each a numpy Generator on its own PCG64 substream.
    """
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("truth", "values", "frailty", "observation")
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def gen_ground_truth(spec: DgpSpec):
    """Low-rank ground truth A @ B / sqrt(rank); deterministic per seed."""
    rng = spawn_streams(spec.seed)["truth"]
    A = rng.standard_normal((spec.n1, spec.rank))
    B = rng.standard_normal((spec.rank, spec.n2))
    return (A @ B) / math.sqrt(spec.rank)


def sample_instance(spec: DgpSpec):
    """Draw one (ground truth, observed data) instance of the design."""
    streams = spawn_streams(spec.seed)
    m = gen_ground_truth(spec)
    shape = (spec.n1, spec.n2)

    rng_x = streams["values"]
    if spec.dgp == DGP1:
        X = (rng_x.random(shape) < expit(m)).astype(np.float64)
    else:
        X = m + rng_x.standard_normal(shape)

    Y = streams["frailty"].standard_normal(shape)
    a = 1.0 / (1.0 + spec.frailty_coef * np.exp(Y))
    p_obs = a * expit(spec.mnar_scale * X + spec.offset)
    W = streams["observation"].random(shape) < p_obs

    data = ObservedData(X, W)
    return SimInstance(
        m_true=m,
        data=data,
        observed_fraction=data.n_observed / (spec.n1 * spec.n2),
    )
