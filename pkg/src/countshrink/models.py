"""Observation models for count matrices.

Two models are supported for an m x k matrix of counts Y:

* ``poisson``: independent entries Y_ij ~ Poisson(X_ij) with positive
  intensities X_ij. The latent parametrization is X = exp(Z).
* ``multinomial``: independent rows Y_i ~ Multinomial(n_i, p_i) with
  row compositions p_i on the simplex. The latent parametrization is
  p_i = softmax(Z_i), which is invariant to adding a constant per row.

This module provides the link maps between latent matrices and mean
parameters, the negative log-likelihoods (additive constants dropped),
their gradients, and the default gradient step sizes. Everything works
on float arrays; counts may be real-valued, which the probe-based risk
estimators rely on.
"""

from enum import Enum

import numpy as np

from .exceptions import DataError


class Model(str, Enum):
    """Observation model tag; serializes as its lowercase string value."""

    POISSON = "poisson"
    MULTINOMIAL = "multinomial"


def as_model(model) -> Model:
    try:
        return Model(model)
    except ValueError:
        raise DataError(f"unknown model {model!r}; expected 'poisson' or 'multinomial'")


def as_matrix(y, name="matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise DataError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains non-finite entries")
    return arr


def check_count_matrix(y, model=None) -> np.ndarray:
    """Validate a count matrix: nonnegative entries, and for the
    multinomial model at least one count in every row."""
    y = as_matrix(y, "counts")
    if (y < 0).any():
        raise DataError("counts must be nonnegative")
    if model is not None and as_model(model) is Model.MULTINOMIAL:
        if (y.sum(axis=1) < 1).any():
            raise DataError("multinomial counts need a positive total in every row")
    return y


def row_totals(y) -> np.ndarray:
    return as_matrix(y, "counts").sum(axis=1)


def check_composition(p, tol=1e-8) -> np.ndarray:
    p = as_matrix(p, "composition")
    if (p <= 0).any() or (p >= 1).any():
        raise DataError("composition entries must lie strictly inside (0, 1)")
    if np.abs(p.sum(axis=1) - 1.0).max() > tol:
        raise DataError("composition rows must sum to 1")
    return p


def check_intensity(x) -> np.ndarray:
    x = as_matrix(x, "intensity")
    if (x <= 0).any():
        raise DataError("intensities must be strictly positive")
    return x


def _row_softmax(z):
    # subtract the row max before exponentiating so overflow cannot occur
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _row_logsumexp(z):
    mx = z.max(axis=1)
    return mx + np.log(np.exp(z - mx[:, None]).sum(axis=1))


def link_forward(model, z) -> np.ndarray:
    """Map a latent matrix to mean parameters.

    Poisson: entrywise exp. Multinomial: row-wise softmax, so each row
    of the result is a strictly positive composition summing to 1.
    """
    model = as_model(model)
    z = as_matrix(z, "latent")
    if model is Model.POISSON:
        return np.exp(z)
    return _row_softmax(z)


def link_inverse(model, x) -> np.ndarray:
    """Right inverse of :func:`link_forward`.

    Poisson: entrywise log of a positive intensity matrix. Multinomial:
    row-centered log of a composition matrix, the unique preimage with
    zero row means. Raises DataError on non-positive entries.
    """
    model = as_model(model)
    x = as_matrix(x)
    if (x <= 0).any():
        raise DataError("link_inverse needs strictly positive entries")
    logx = np.log(x)
    if model is Model.POISSON:
        return logx
    return logx - logx.mean(axis=1, keepdims=True)


def nll(model, y, z) -> float:
    """Negative log-likelihood of latent z given counts y, constants dropped.

    Poisson: sum(exp(z)) - sum(y * z). Multinomial (normalized per row
    by the total n_i): -sum((y_ij / n_i) z_ij) + sum_i logsumexp(z_i).
    """
    model = as_model(model)
    y = as_matrix(y, "counts")
    z = as_matrix(z, "latent")
    if y.shape != z.shape:
        raise DataError(f"shape mismatch: counts {y.shape} vs latent {z.shape}")
    if model is Model.POISSON:
        return float(np.exp(z).sum() - (y * z).sum())
    n = y.sum(axis=1)
    if (n <= 0).any():
        raise DataError("multinomial rows need a positive total")
    return float(-((y / n[:, None]) * z).sum() + _row_logsumexp(z).sum())


def nll_grad(model, y, z) -> np.ndarray:
    """Gradient of :func:`nll` in z.

    Poisson: exp(z) - y. Multinomial: softmax(z) - y / n_i, whose rows
    always sum to 0.
    """
    model = as_model(model)
    y = as_matrix(y, "counts")
    z = as_matrix(z, "latent")
    if y.shape != z.shape:
        raise DataError(f"shape mismatch: counts {y.shape} vs latent {z.shape}")
    if model is Model.POISSON:
        return np.exp(z) - y
    n = y.sum(axis=1)
    if (n <= 0).any():
        raise DataError("multinomial rows need a positive total")
    return _row_softmax(z) - y / n[:, None]


def step_size(model, y) -> float:
    """Default gradient step.

    Poisson: 1 / max|y_ij|, valid while iterates keep intensities below
    that bound; an all-zero matrix has no usable scale and raises.
    Multinomial: 2.0. The softmax Hessian has spectral norm at most 1/2,
    so any step below 4 is admissible; 2 is the default.
    """
    model = as_model(model)
    y = as_matrix(y, "counts")
    if model is Model.POISSON:
        scale = np.abs(y).max()
        if scale <= 0:
            raise DataError("all-zero counts: no intensity scale for a step size")
        return float(1.0 / scale)
    return 2.0
