"""Shrinkage and low-rank estimation for count matrices.

Estimate Poisson intensity matrices and multinomial composition
matrices by nuclear-norm-penalized maximum likelihood or simple
shrinkage families, and pick the regularization weight from the data
with unbiased Kullback-Leibler risk surrogates evaluated either
exactly or through a fast randomized Taylor scheme.
"""

from ._version import __version__
from .analysis import CooccurrenceResult, column_frequencies, cosine_cooccurrence
from .estimators import LowRankMLE, MaximumLikelihood, SimpleShrinkage, ZeroReplacement
from .exceptions import DataError, NumericalError
from .models import Model, link_forward, link_inverse, nll, nll_grad, step_size
from .optim import FistaConfig, FitResult, center_rows, fista_solve, prox_centered_nuclear
from .risk import (
    CvConfig,
    RiskCurve,
    TaylorConfig,
    cv_criterion,
    downsample_rows,
    kl_risk,
    multinomial_unbiased_risk,
    multinomial_unbiased_risk_plus_one,
    poisson_unbiased_risk,
    risk_constant,
    risk_curve,
    taylor_decrement_estimate,
)
from .simulate import (
    SimData,
    SimSpec,
    generate,
    random_lowrank_composition,
    sample_counts,
    sample_row_totals,
    sinusoid_composition,
    sinusoid_latent,
)

__all__ = [
    "__version__",
    "Model",
    "DataError",
    "NumericalError",
    "link_forward",
    "link_inverse",
    "nll",
    "nll_grad",
    "step_size",
    "center_rows",
    "prox_centered_nuclear",
    "fista_solve",
    "FistaConfig",
    "FitResult",
    "MaximumLikelihood",
    "ZeroReplacement",
    "SimpleShrinkage",
    "LowRankMLE",
    "TaylorConfig",
    "CvConfig",
    "RiskCurve",
    "kl_risk",
    "risk_constant",
    "taylor_decrement_estimate",
    "poisson_unbiased_risk",
    "multinomial_unbiased_risk",
    "multinomial_unbiased_risk_plus_one",
    "downsample_rows",
    "cv_criterion",
    "risk_curve",
    "SimSpec",
    "SimData",
    "generate",
    "sinusoid_composition",
    "random_lowrank_composition",
    "sinusoid_latent",
    "sample_row_totals",
    "sample_counts",
    "column_frequencies",
    "cosine_cooccurrence",
    "CooccurrenceResult",
]
