"""Low-rank matrix completion for data whose missingness depends on the values.

The estimator minimizes a pairwise rank loss over observed entries sharing a
row or a column, plus a nuclear-norm penalty, inside an entrywise box. That
loss only sees differences of entries, which makes it immune to the unknown
observation law and to any entrywise nuisance in the data distribution; the
price is a constant-shift ambiguity, resolved by picking the shifted copy with
minimal nuclear norm.
"""

from .core import (
    MatrixNorms,
    NumericalError,
    ObservedData,
    SvdResult,
    as_matrix,
    mean_value,
    norms,
    shift,
    singular_values,
    svd,
)
from .evaluate import (
    EvalReport,
    TestSet,
    UndefinedMetricError,
    evaluate_report,
    fit_baseline_sq,
    rank_metrics,
    rmse,
)
from .loss import (
    LipschitzInfo,
    LossContext,
    gradient,
    lipschitz,
    loss,
    pair_loss,
    pair_weight,
    sample_seminorm_sq,
)
from .prox import AdmmConfig, AdmmReport, WarmStart, clip, prox_nuclear_box, svt
from .sim import DGP1, DGP2, DgpSpec, SimInstance, gen_ground_truth, sample_instance, spawn_streams
from .solver import (
    DescentViolation,
    FitResult,
    SolverConfig,
    SolverTrace,
    fit,
    fit_fista,
    fit_pgd,
    objective,
)
from .transform import TransformResult, b_diagnostic, identify_shift

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig",
    "AdmmReport",
    "DGP1",
    "DGP2",
    "DescentViolation",
    "DgpSpec",
    "EvalReport",
    "FitResult",
    "LipschitzInfo",
    "LossContext",
    "MatrixNorms",
    "NumericalError",
    "ObservedData",
    "SimInstance",
    "SolverConfig",
    "SolverTrace",
    "SvdResult",
    "TestSet",
    "TransformResult",
    "UndefinedMetricError",
    "WarmStart",
    "as_matrix",
    "b_diagnostic",
    "clip",
    "evaluate_report",
    "fit",
    "fit_baseline_sq",
    "fit_fista",
    "fit_pgd",
    "gen_ground_truth",
    "gradient",
    "identify_shift",
    "lipschitz",
    "loss",
    "mean_value",
    "norms",
    "objective",
    "pair_loss",
    "pair_weight",
    "prox_nuclear_box",
    "rank_metrics",
    "rmse",
    "sample_instance",
    "sample_seminorm_sq",
    "shift",
    "singular_values",
    "spawn_streams",
    "svd",
    "svt",
]
