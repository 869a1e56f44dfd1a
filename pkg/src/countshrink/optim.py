"""Accelerated proximal solver for nuclear-norm-penalized likelihoods.

The estimators minimize F(Z) + lam * ||Z - M(Z)||_* where F is a count
model negative log-likelihood, M(Z) is the matrix of row means spread
across columns, and ||.||_* is the nuclear norm. Penalizing only the
row-centered part leaves per-row offsets free, which matters for the
multinomial model where softmax ignores them.

The proximal map of the centered penalty has a closed form: keep the
row means, soft-threshold the singular values of the centered part.
The solver is FISTA with the standard momentum sequence, run for a
fixed number of iterations rather than to a convergence criterion.
"""

from dataclasses import dataclass, field

import numpy as np

from . import models
from .exceptions import DataError, NumericalError

# singular values below this fraction of the largest count toward rank
EFFECTIVE_RANK_RTOL = 1e-8


def center_rows(z) -> np.ndarray:
    """Subtract each row's mean from that row."""
    z = models.as_matrix(z, "latent")
    return z - z.mean(axis=1, keepdims=True)


def effective_rank(z, rtol=EFFECTIVE_RANK_RTOL) -> int:
    """Number of singular values of the row-centered part of z that
    exceed rtol times the largest one."""
    c = center_rows(z)
    s = np.linalg.svd(c, compute_uv=False)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int((s > rtol * s[0]).sum())


def prox_centered_nuclear(z, threshold) -> np.ndarray:
    """Proximal map of threshold * ||row-centered part||_*.

    Splits z into row means plus centered part, soft-thresholds the
    centered part's singular values, and reassembles. Row means are
    preserved exactly because the surviving right singular vectors stay
    orthogonal to the all-ones direction.

    Parameters
    ----------
    z : ndarray
        Input matrix.
    threshold : float
        Soft-threshold level, >= 0. At 0 the map reduces to an SVD
        round trip of the input.
    """
    z = models.as_matrix(z, "prox input")
    if threshold < 0:
        raise DataError("prox threshold must be >= 0")
    mean = z.mean(axis=1, keepdims=True)
    centered = z - mean
    try:
        u, s, vt = np.linalg.svd(centered, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD failed in prox: {e}")
    s = np.maximum(s - threshold, 0.0)
    return mean + (u * s) @ vt


@dataclass
class FistaConfig:
    """Solver settings.

    step=None means use the model default from models.step_size. The
    step must stay inside (0, 2 * default) = (0, 2/L) for the model's
    gradient Lipschitz constant L. init=None starts from the zero
    matrix. center=False switches to the plain (uncentered) nuclear
    norm penalty; the default centered form is what the estimators use.
    """

    max_iters: int = 100
    step: float | None = None
    lam: float = 0.0
    init: np.ndarray | None = None
    record_objective: bool = False
    center: bool = True

    def validate(self):
        if self.max_iters < 1:
            raise DataError("max_iters must be >= 1")
        if self.lam < 0:
            raise DataError("lam must be >= 0")


@dataclass
class FitResult:
    """Solver output.

    z_hat is the final proximal iterate. objective_trace holds one
    objective value per iteration when recording was requested, else
    stays empty. intensity_bound_exceeded flags Poisson runs whose
    iterates left the intensity range (0, max|y|) that justifies the
    default step; the run is not aborted, only flagged.
    """

    z_hat: np.ndarray
    objective_trace: list = field(default_factory=list)
    effective_rank: int = 0
    intensity_bound_exceeded: bool = False


def objective(model, y, z, lam, center=True) -> float:
    """Penalized objective F(z) + lam * ||centered z||_*."""
    part = center_rows(z) if center else models.as_matrix(z)
    nuc = np.linalg.svd(part, compute_uv=False).sum()
    return models.nll(model, y, z) + lam * float(nuc)


def fista_solve(model, y, config: FistaConfig) -> FitResult:
    """Run FISTA for exactly config.max_iters iterations.

    Each iteration takes a gradient step at the extrapolated point,
    applies the proximal map with threshold step * lam, then updates
    the momentum weight rho via rho' = (1 + sqrt(1 + 4 rho^2)) / 2 and
    extrapolates with coefficient (rho - 1) / rho'. The returned z_hat
    is the last proximal iterate. Deterministic given its inputs.
    """
    model = models.as_model(model)
    y = models.as_matrix(y, "counts")
    config.validate()

    default_step = models.step_size(model, y)
    step = default_step if config.step is None else float(config.step)
    if not 0 < step < 2 * default_step:
        raise DataError(
            f"step {step} outside the admissible range (0, {2 * default_step})"
        )

    if config.init is None:
        x = np.zeros_like(y)
    else:
        x = models.as_matrix(config.init, "init")
        if x.shape != y.shape:
            raise DataError(f"init shape {x.shape} does not match counts {y.shape}")
        x = x.copy()

    if model is models.Model.POISSON:
        log_bound = np.log(np.abs(y).max())

    def prox(v):
        if config.center:
            return prox_centered_nuclear(v, step * config.lam)
        u, s, vt = np.linalg.svd(v, full_matrices=False)
        return (u * np.maximum(s - step * config.lam, 0.0)) @ vt

    extrap = x
    rho = 1.0
    trace = []
    bound_exceeded = False
    for t in range(config.max_iters):
        v = extrap - step * models.nll_grad(model, y, extrap)
        if not np.isfinite(v).all():
            raise NumericalError(f"FISTA diverged at iteration {t}")
        x_next = prox(v)
        if not np.isfinite(x_next).all():
            raise NumericalError(f"FISTA diverged at iteration {t}")
        rho_next = (1.0 + np.sqrt(1.0 + 4.0 * rho * rho)) / 2.0
        extrap = x_next + ((rho - 1.0) / rho_next) * (x_next - x)
        x = x_next
        rho = rho_next
        if model is models.Model.POISSON and x.max() >= log_bound:
            bound_exceeded = True
        if config.record_objective:
            trace.append(objective(model, y, x, config.lam, config.center))

    return FitResult(
        z_hat=x,
        objective_trace=trace,
        effective_rank=effective_rank(x),
        intensity_bound_exceeded=bound_exceeded,
    )
