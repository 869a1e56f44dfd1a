"""Estimators mapping a count matrix to its mean-parameter matrix.

All estimators follow the scikit-learn protocol: constructor arguments
are hyperparameters, ``fit(Y)`` computes and stores the estimate,
``transform(Y)`` is the underlying pure map and may be called without
fitting. For the multinomial model the estimate is a row-stochastic
composition matrix; the low-rank estimator under the Poisson model
returns an intensity matrix instead.

``row_at_decrement(Y, i, j)`` returns row i of the estimate the map
would produce on Y with one count removed at (i, j). The risk
estimators call it heavily. The default implementation re-runs the
full map on the decremented matrix; SimpleShrinkage overrides it with
an O(k) closed form and is the only estimator defined when the
decremented entry drops to -1.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import models, optim
from .exceptions import DataError

__all__ = [
    "MaximumLikelihood",
    "ZeroReplacement",
    "SimpleShrinkage",
    "LowRankMLE",
]


class _CountEstimator(BaseEstimator, TransformerMixin):
    """Shared plumbing: fit stores the transform output."""

    output = "composition"

    def fit(self, Y, y=None):
        self.estimate_ = self.transform(Y)
        return self

    def fit_transform(self, Y, y=None):
        return self.fit(Y).estimate_

    def _check_index(self, Y, i, j):
        m, k = Y.shape
        if not (0 <= i < m and 0 <= j < k):
            raise DataError(f"index ({i}, {j}) outside a {m} x {k} matrix")

    def row_at_decrement(self, Y, i, j):
        """Row i of the estimate on Y with one count removed at (i, j).

        Refits on the decremented matrix. Raises DataError when the
        entry is already below 1, since this estimator cannot absorb a
        negative count.
        """
        Y = models.as_matrix(Y, "counts")
        self._check_index(Y, i, j)
        if Y[i, j] < 1:
            raise DataError(
                f"entry ({i}, {j}) is {Y[i, j]}; decrementing it would go negative"
            )
        Yd = Y.copy()
        Yd[i, j] -= 1.0
        return self.transform(Yd)[i]


class MaximumLikelihood(_CountEstimator):
    """Row-wise empirical composition y_ij / n_i.

    The output is row stochastic but may contain exact zeros, so it is
    not a strictly positive composition; ``fit`` records that in
    ``has_zeros_``.
    """

    def transform(self, Y):
        Y = models.as_matrix(Y, "counts")
        if (Y < 0).any():
            raise DataError("maximum likelihood needs nonnegative counts")
        n = Y.sum(axis=1)
        if (n <= 0).any():
            raise DataError("every row needs a positive total")
        return Y / n[:, None]

    def fit(self, Y, y=None):
        self.estimate_ = self.transform(Y)
        self.has_zeros_ = bool((self.estimate_ == 0).any())
        return self


class ZeroReplacement(_CountEstimator):
    """Replace counts below z by z, then renormalize each row.

    Parameters
    ----------
    z : float
        Replacement level in (0, 1).
    """

    def __init__(self, z=0.5):
        self.z = z

    def transform(self, Y):
        if not 0 < self.z < 1:
            raise DataError("z must lie in (0, 1)")
        Y = models.as_matrix(Y, "counts")
        if (Y < 0).any():
            raise DataError("zero replacement needs nonnegative counts")
        m = np.maximum(Y, self.z)
        return m / m.sum(axis=1, keepdims=True)


class SimpleShrinkage(_CountEstimator):
    """Shrink the clamped empirical composition toward the uniform row.

    With y+ = max(y, 0) clamped entrywise and s_i = sum_j y+_ij, the
    estimate is

        p_ij = 1/k + w * (y+_ij - s_i / k) / (eps + s_i).

    Rows sum to 1 identically, including on inputs holding a -1 entry,
    and every entry stays positive for w < 1 (and stays >= a positive
    floor eps/(k (eps + s_i)) even at w = 1). An all-zero row gives the
    uniform composition.

    Parameters
    ----------
    w : float
        Shrinkage weight in [0, 1]; 0 is fully uniform, 1 keeps the
        clamped data apart from the eps damping.
    eps : float
        Positive damping constant in the denominator.
    """

    def __init__(self, w=1.0, eps=0.5):
        self.w = w
        self.eps = eps

    def _check_params(self):
        if not 0 <= self.w <= 1:
            raise DataError("w must lie in [0, 1]")
        if not self.eps > 0:
            raise DataError("eps must be positive")

    def transform(self, Y):
        self._check_params()
        Y = models.as_matrix(Y, "counts")
        k = Y.shape[1]
        clamped = np.maximum(Y, 0.0)
        s = clamped.sum(axis=1, keepdims=True)
        return 1.0 / k + self.w * (clamped - s / k) / (self.eps + s)

    def row_at_decrement(self, Y, i, j):
        """Closed-form decrement: O(k) instead of a full re-map.

        Two branches. A zero entry decrements to -1, which the clamp
        absorbs, so the row is unchanged. An entry >= 1 loses one
        count, shifting its numerator by (1 - k)/k and the row's
        denominator by -1.
        """
        self._check_params()
        Y = models.as_matrix(Y, "counts")
        self._check_index(Y, i, j)
        k = Y.shape[1]
        row = np.maximum(Y[i], 0.0)
        s = row.sum()
        if Y[i, j] < 1:
            return 1.0 / k + self.w * (row - s / k) / (self.eps + s)
        num = row - s / k
        num = num + (1.0 / k)  # every numerator gains 1/k from the smaller mean
        num[j] -= 1.0  # the decremented entry also loses its count
        return 1.0 / k + self.w * num / (self.eps + s - 1.0)


class LowRankMLE(_CountEstimator):
    """Penalized maximum likelihood with a low-rank latent matrix.

    Minimizes the model negative log-likelihood plus lam times the
    nuclear norm of the row-centered latent matrix, using FISTA for a
    fixed number of iterations, and maps the solution through the model
    link. Under the multinomial model the output is a strictly positive
    composition matrix; under the Poisson model a positive intensity
    matrix.

    The map is defined for real-valued inputs (entries may dip slightly
    below zero), which the finite-difference risk probes require. Rows
    must keep positive totals under the multinomial model.

    Parameters
    ----------
    model : str
        'poisson' or 'multinomial'.
    lam : float
        Penalty weight, >= 0.
    iters : int
        FISTA iteration count.
    step : float or None
        Gradient step; None uses the model default.
    init : ndarray or None
        Starting latent matrix; None starts from zero.
    center : bool
        Penalize only the row-centered part (default) or the full
        latent matrix.
    record_objective : bool
        Record the objective value at every iteration in the fit
        result.
    """

    def __init__(self, model="multinomial", lam=1.0, iters=100, step=None,
                 init=None, center=True, record_objective=False):
        self.model = model
        self.lam = lam
        self.iters = iters
        self.step = step
        self.init = init
        self.center = center
        self.record_objective = record_objective

    @property
    def output(self):
        return "intensity" if models.as_model(self.model) is models.Model.POISSON else "composition"

    def _config(self):
        return optim.FistaConfig(
            max_iters=self.iters,
            step=self.step,
            lam=self.lam,
            init=self.init,
            record_objective=self.record_objective,
            center=self.center,
        )

    def _solve(self, Y):
        model = models.as_model(self.model)
        Y = models.as_matrix(Y, "counts")
        if model is models.Model.MULTINOMIAL and (Y.sum(axis=1) <= 0).any():
            raise DataError("every row needs a positive total")
        result = optim.fista_solve(model, Y, self._config())
        return result, models.link_forward(model, result.z_hat)

    def transform(self, Y):
        return self._solve(Y)[1]

    def fit(self, Y, y=None):
        self.fit_result_, self.estimate_ = self._solve(Y)
        self.effective_rank_ = self.fit_result_.effective_rank
        return self
