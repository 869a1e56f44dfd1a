"""Risk measurement and data-driven selection of regularization weight.

For an estimator f mapping counts Y to mean parameters, the quality
target is Kullback-Leibler risk against the unknown truth. Two
families of tools estimate it from a single count matrix:

* Unbiased risk identities. For Poisson data, E g(Y - E_ij) can be
  read off the observed counts through E[Y_ij g(Y - E_ij)] =
  E[X_ij g(Y)] type identities, giving sum(X_hat) -
  sum_ij Y_ij log f_ij(Y - E_ij) as an unbiased surrogate for the risk
  up to a constant in the truth. For multinomial rows the analogous
  surrogate is -sum_i w_i sum_j Y_ij log f_ij(Y - E_ij) with weights
  w_i = 1/n_i (or 1/(n_i + 1) for the shifted variant), unbiased for
  the risk of the estimator applied to one fewer draw per row, again
  up to an entropy constant. Terms with Y_ij = 0 carry zero weight, so
  no decrement below zero is ever evaluated.

* A fast surrogate for the decrement values. Evaluating f on all
  decremented matrices needs one re-fit per positive entry. The Taylor
  probe estimator replaces g_ij(Y - E_ij) by a truncated Taylor series
  whose mixed directional derivatives are averaged over Rademacher
  sign matrices and approximated by nested centered finite
  differences, costing 2^(order+1) - 1 evaluations of g per probe
  draw regardless of the matrix size.

A K-fold criterion with entry-level holdout and a small-sample
downsampling identity (removing one count per row at categorical
random yields an exact sample of one fewer draw) complete the toolbox.
``risk_curve`` sweeps a grid of penalties and selects the minimizer.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng, models
from ._io import fmt_float, json_text
from ._version import SCHEMA_VERSION, __version__
from .estimators import LowRankMLE, MaximumLikelihood
from .exceptions import DataError, NumericalError
from .optim import FistaConfig

__all__ = [
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
]


@dataclass
class TaylorConfig:
    """Settings for the probe-based decrement estimator.

    order is the Taylor truncation level in [0, 6]; 0 reproduces g(y)
    exactly. Within the term of order L every nested difference uses
    the same step fd_eps_base * fd_eps_scale**(1/L); the L-th root
    keeps the product of steps, and with it the error scale, comparable
    across terms. num_probe_draws averages that many independent
    Rademacher draws; 1 is the production default.
    """

    order: int = 2
    num_probe_draws: int = 1
    fd_eps_base: float = 0.25
    fd_eps_scale: float = 0.1
    seed: int = 0

    def validate(self):
        if not 0 <= self.order <= 6:
            raise DataError("order must lie in [0, 6]")
        if self.num_probe_draws < 1:
            raise DataError("num_probe_draws must be >= 1")
        if not self.fd_eps_base > 0:
            raise DataError("fd_eps_base must be positive")
        if not 0 < self.fd_eps_scale < 1:
            raise DataError("fd_eps_scale must lie in (0, 1)")

    def eps(self, level) -> float:
        return self.fd_eps_base * self.fd_eps_scale ** (1.0 / level)

    def to_dict(self):
        return {
            "order": self.order,
            "num_probe_draws": self.num_probe_draws,
            "fd_eps_base": self.fd_eps_base,
            "fd_eps_scale": self.fd_eps_scale,
            "seed": self.seed,
        }


@dataclass
class CvConfig:
    """K-fold entry-holdout settings: folds K, number of random splits
    L, and the seed of the split stream."""

    folds: int = 5
    splits: int = 20
    seed: int = 0

    def validate(self):
        if self.folds < 2:
            raise DataError("folds must be >= 2")
        if self.splits < 1:
            raise DataError("splits must be >= 1")

    def to_dict(self):
        return {"folds": self.folds, "splits": self.splits, "seed": self.seed}


def kl_risk(model, estimate, truth) -> float:
    """Kullback-Leibler risk of an estimate against a known truth.

    Poisson: sum(e - x - x log(e/x)) over entries. Multinomial:
    sum(p log(p / e)) over entries, the per-row KL divergence
    normalized by the number of draws. Estimates holding an exact zero
    get infinite risk; the truth must be strictly positive.
    """
    model = models.as_model(model)
    e = models.as_matrix(estimate, "estimate")
    x = models.as_matrix(truth, "truth")
    if e.shape != x.shape:
        raise DataError(f"shape mismatch: estimate {e.shape} vs truth {x.shape}")
    if (x <= 0).any():
        raise DataError("truth must be strictly positive")
    if (e < 0).any():
        raise DataError("estimate entries must be >= 0")
    if (e == 0).any():
        return math.inf
    if model is models.Model.POISSON:
        return float((e - x - x * np.log(e / x)).sum())
    return float((x * np.log(x / e)).sum())


def risk_constant(model, truth) -> float:
    """Truth-only constant linking the unbiased surrogates to the risk:
    sum(x log x - x) for Poisson, sum(p log p) for multinomial."""
    model = models.as_model(model)
    x = models.as_matrix(truth, "truth")
    if (x <= 0).any():
        raise DataError("truth must be strictly positive")
    if model is models.Model.POISSON:
        return float((x * np.log(x) - x).sum())
    return float((x * np.log(x)).sum())


def _rademacher(rng, shape):
    return np.where(rng.random(shape) < 0.5, -1.0, 1.0)


def _eval_map(g, arg, shape):
    out = np.asarray(g(arg), dtype=float)
    if out.shape != shape:
        raise DataError(f"map returned shape {out.shape}, expected {shape}")
    if not np.isfinite(out).all():
        raise NumericalError("map returned non-finite values at a probe point")
    return out


def _directional(g, base, level, probes, step, shape):
    # nested centered differences; one fixed step per Taylor term
    if level == 0:
        return _eval_map(g, base, shape)
    offset = step * probes[level - 1]
    hi = _directional(g, base + offset, level - 1, probes, step, shape)
    lo = _directional(g, base - offset, level - 1, probes, step, shape)
    return (hi - lo) / (2.0 * step)


def taylor_decrement_estimate(g, y, config: TaylorConfig, key=()) -> np.ndarray:
    """Entrywise estimate of g(y - E_ij) for every position (i, j).

    Truncated Taylor expansion of the decrement around y: the term of
    order L is (-1)^L / L! times the elementwise product of L
    Rademacher sign matrices times the L-th mixed directional
    derivative of g along those matrices, estimated by nested centered
    finite differences. Each probe draw costs 2^(order+1) - 1
    evaluations of g; draws are averaged. Probe streams derive from
    (seed, *key, draw index), so results are reproducible and
    independent of evaluation order.
    """
    config.validate()
    y = models.as_matrix(y, "counts")
    shape = y.shape
    acc = np.zeros(shape)
    for draw in range(config.num_probe_draws):
        rng = _rng.stream(config.seed, _rng.TAG_PROBE, *key, draw)
        probes = [_rademacher(rng, shape) for _ in range(config.order)]
        q = _eval_map(g, y, shape)
        sign = 1.0
        factorial = 1.0
        probe_product = np.ones(shape)
        for level in range(1, config.order + 1):
            sign = -sign
            factorial *= level
            probe_product = probe_product * probes[level - 1]
            deriv = _directional(g, y, level, probes, config.eps(level), shape)
            q = q + (sign / factorial) * probe_product * deriv
        acc += q
    return acc / config.num_probe_draws


def _log_map(est):
    def g(arg):
        return np.log(est.transform(arg))

    return g


def poisson_unbiased_risk(est, y, fast: TaylorConfig | None = None, key=()) -> float:
    """Unbiased surrogate for the Poisson KL risk of an intensity
    estimator, up to a constant in the truth.

    Computes sum(X_hat) - sum_{y_ij > 0} y_ij log f_ij(y - E_ij). With
    fast=None the decrements are evaluated exactly, one re-map per
    positive entry; with a TaylorConfig the log-decrement matrix is
    replaced by the probe estimate.
    """
    y = models.check_count_matrix(y)
    if getattr(est, "output", None) == "composition":
        raise DataError("Poisson risk needs an intensity estimator")
    x_hat = models.as_matrix(est.transform(y), "estimate")
    if (x_hat <= 0).any():
        raise DataError("estimator produced non-positive intensities")
    total = float(x_hat.sum())
    if fast is None:
        for i, j in zip(*np.nonzero(y)):
            v = est.row_at_decrement(y, i, j)[j]
            if v <= 0:
                raise DataError(
                    f"non-positive intensity at decremented entry ({i}, {j})"
                )
            total -= y[i, j] * math.log(v)
        return total
    q = taylor_decrement_estimate(_log_map(est), y, fast, key=key)
    return total - float((y * q)[y > 0].sum())


def _multinomial_surrogate(est, y, fast, key, total_shift) -> float:
    y = models.check_count_matrix(y, models.Model.MULTINOMIAL)
    if getattr(est, "output", None) == "intensity":
        raise DataError("multinomial risk needs a composition estimator")
    weights = 1.0 / (y.sum(axis=1) + total_shift)
    if fast is None:
        acc = 0.0
        for i, j in zip(*np.nonzero(y)):
            v = est.row_at_decrement(y, i, j)[j]
            if v <= 0:
                raise DataError(
                    f"non-positive probability at decremented entry ({i}, {j})"
                )
            acc += weights[i] * y[i, j] * math.log(v)
        return -acc
    q = taylor_decrement_estimate(_log_map(est), y, fast, key=key)
    weighted = weights[:, None] * y * q
    return -float(weighted[y > 0].sum())


def multinomial_unbiased_risk(est, y, fast: TaylorConfig | None = None, key=()) -> float:
    """Unbiased surrogate for the multinomial KL risk at one fewer
    draw per row, up to the truth's entropy constant.

    Computes -sum_i (1/n_i) sum_{j: y_ij > 0} y_ij log f_ij(y - E_ij).
    Exact decrements with fast=None, probe estimate otherwise.
    """
    return _multinomial_surrogate(est, y, fast, key, total_shift=0.0)


def multinomial_unbiased_risk_plus_one(est, y, fast: TaylorConfig | None = None,
                                       key=()) -> float:
    """Variant with weights 1/(n_i + 1): unbiased for the risk at the
    observed number of draws, evaluated on one extra draw per row."""
    return _multinomial_surrogate(est, y, fast, key, total_shift=1.0)


def downsample_rows(y, seed=0, rng=None) -> np.ndarray:
    """Remove one count per row, choosing the column with probability
    y_ij / n_i. A multinomial row with n_i draws becomes an exact
    multinomial sample with n_i - 1 draws at the same composition."""
    y = models.check_count_matrix(y, models.Model.MULTINOMIAL)
    out = y.copy()
    for i in range(y.shape[0]):
        row_rng = _rng.stream(seed, _rng.TAG_DOWNSAMPLE, i) if rng is None else rng
        j = _rng.categorical(row_rng, y[i])
        out[i, j] -= 1.0
    return out


def cv_criterion(est, y, config: CvConfig) -> float:
    """K-fold entry-holdout criterion for a composition estimator.

    Each of L random splits keeps floor((K-1)m/K) full rows for
    training; every remaining row keeps a random subset of
    floor((K-1)k/K) columns and is zeroed elsewhere. The estimator is
    mapped over the masked matrix, and the held-out rows are scored by
    sum_j p_ij log(p_ij / q_ij) against the full-matrix empirical
    composition p, with 0 log 0 = 0. Splits are averaged. A zero
    estimate where p is positive yields the infinite sentinel.
    """
    config.validate()
    y = models.check_count_matrix(y, models.Model.MULTINOMIAL)
    m, k = y.shape
    train_rows = ((config.folds - 1) * m) // config.folds
    keep_cols = ((config.folds - 1) * k) // config.folds
    if train_rows < 1 or keep_cols < 1:
        raise DataError("matrix too small for the requested fold count")
    p_full = MaximumLikelihood().transform(y)
    rng = _rng.stream(config.seed, _rng.TAG_CV)
    total = 0.0
    for _ in range(config.splits):
        order = rng.permutation(m)
        held = order[train_rows:]
        masked = np.zeros_like(y)
        masked[order[:train_rows]] = y[order[:train_rows]]
        for i in held:
            cols = rng.permutation(k)[:keep_cols]
            masked[i, cols] = y[i, cols]
        q = models.as_matrix(est.transform(masked), "estimate")
        for i in held:
            support = p_full[i] > 0
            if (q[i, support] <= 0).any():
                return math.inf
            p = p_full[i, support]
            total += float((p * np.log(p / q[i, support])).sum())
    return total / config.splits


@dataclass
class RiskCurve:
    """A sweep of the risk surrogate over a penalty grid.

    ukla holds the unbiased risk estimates (shifted by
    constant_offset when a truth was supplied, so oracle and estimate
    curves overlay); cv and kla_oracle are optional companions.
    selected_lambda is the grid value minimizing the surrogate, ties
    resolved toward the smaller value.
    """

    model: models.Model
    grid: np.ndarray
    ukla: np.ndarray
    cv: np.ndarray | None
    kla_oracle: np.ndarray | None
    selected_lambda: float
    constant_offset: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_csv_text(self) -> str:
        lines = ["lambda,ukla,cv,kla_oracle"]
        for idx in range(self.grid.size):
            cells = [fmt_float(self.grid[idx]), fmt_float(self.ukla[idx])]
            cells.append("" if self.cv is None else fmt_float(self.cv[idx]))
            cells.append(
                "" if self.kla_oracle is None else fmt_float(self.kla_oracle[idx])
            )
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "model": self.model.value,
            "grid": list(self.grid),
            "ukla": list(self.ukla),
            "cv": None if self.cv is None else list(self.cv),
            "kla_oracle": None if self.kla_oracle is None else list(self.kla_oracle),
            "selected_lambda": self.selected_lambda,
            "constant_offset": self.constant_offset,
            "meta": self.meta,
        }
        return json_text(payload)


def risk_curve(model, y, grid, fista: FistaConfig | None = None,
               taylor: TaylorConfig | None = None, cv: CvConfig | None = None,
               truth=None, fix_probes=False, estimator_factory=None,
               method="auto") -> RiskCurve:
    """Sweep a penalty grid and select the surrogate-risk minimizer.

    By default each grid value parametrizes a LowRankMLE for the given
    model (settings taken from the fista template) and the surrogate
    uses the probe estimator; estimator_factory overrides the map from
    grid value to estimator, in which case exact decrements are used
    unless method forces otherwise. method is 'auto', 'taylor', or
    'exact'. Probe streams are re-derived per grid index unless
    fix_probes is set. Supplying the truth adds the oracle risk column
    and shifts the surrogate by risk_constant so the curves overlay.
    """
    model = models.as_model(model)
    y = models.check_count_matrix(y, model)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DataError("grid must be a nonempty 1-D array")
    if (np.diff(grid) <= 0).any():
        raise DataError("grid must be strictly increasing")
    if method not in ("auto", "taylor", "exact"):
        raise DataError("method must be 'auto', 'taylor', or 'exact'")
    fista = fista or FistaConfig()
    taylor = taylor or TaylorConfig()
    if cv is not None and model is models.Model.POISSON:
        raise DataError("the CV criterion applies to the multinomial model only")

    if estimator_factory is None:
        def estimator_factory(value):
            return LowRankMLE(
                model=model.value, lam=float(value), iters=fista.max_iters,
                step=fista.step, init=fista.init, center=fista.center,
            )

    estimates = np.zeros(grid.size)
    cv_vals = np.zeros(grid.size) if cv is not None else None
    oracle = np.zeros(grid.size) if truth is not None else None
    est_name = None
    for idx, value in enumerate(grid):
        est = estimator_factory(value)
        est_name = type(est).__name__
        use_taylor = method == "taylor" or (
            method == "auto" and isinstance(est, LowRankMLE)
        )
        fast = taylor if use_taylor else None
        key = () if fix_probes else (idx,)
        if model is models.Model.POISSON:
            estimates[idx] = poisson_unbiased_risk(est, y, fast=fast, key=key)
        else:
            estimates[idx] = multinomial_unbiased_risk(est, y, fast=fast, key=key)
        if oracle is not None:
            oracle[idx] = kl_risk(model, est.transform(y), truth)
        if cv_vals is not None:
            cv_vals[idx] = cv_criterion(est, y, cv)

    selected = float(grid[int(np.argmin(estimates))])
    offset = risk_constant(model, truth) if truth is not None else 0.0
    meta = {
        "estimator": est_name,
        "fista": {
            "max_iters": fista.max_iters,
            "step": fista.step,
            "center": fista.center,
        },
        "taylor": taylor.to_dict(),
        "cv": None if cv is None else cv.to_dict(),
        "fix_probes": bool(fix_probes),
        "method": method,
        "offset_applied": truth is not None,
    }
    return RiskCurve(
        model=model,
        grid=grid,
        ukla=estimates + offset,
        cv=cv_vals,
        kla_oracle=oracle,
        selected_lambda=selected,
        constant_offset=offset,
        meta=meta,
    )
