"""Descriptive summaries of a fitted composition matrix."""

from dataclasses import dataclass

import numpy as np

from . import models
from .exceptions import DataError

# column norms at or below this count as constant
_DEGENERATE_TOL = 1e-12


def column_frequencies(p_hat, row_totals) -> np.ndarray:
    """Overall column frequencies sum_i n_i p_ij / sum_i n_i.

    Weights each row's composition by its number of draws. The result
    sums to 1 when the rows do.
    """
    p = models.as_matrix(p_hat, "composition")
    totals = np.asarray(row_totals, dtype=float)
    if totals.ndim != 1 or totals.shape[0] != p.shape[0]:
        raise DataError("row totals must be a vector with one entry per row")
    if (totals <= 0).any():
        raise DataError("row totals must be positive")
    return (totals @ p) / totals.sum()


@dataclass
class CooccurrenceResult:
    """Cosine similarities between centered columns.

    values is k x k with entries in [-1, 1]; rows and columns flagged
    in degenerate_columns (constant columns, which have no direction
    after centering) are defined as 0.
    """

    values: np.ndarray
    degenerate_columns: np.ndarray


def cosine_cooccurrence(p_hat) -> CooccurrenceResult:
    """Column co-occurrence as cosine similarity after centering each
    column by its mean across rows."""
    p = models.as_matrix(p_hat, "composition")
    centered = p - p.mean(axis=0, keepdims=True)
    norms = np.sqrt((centered * centered).sum(axis=0))
    degenerate = norms <= _DEGENERATE_TOL
    safe = np.where(degenerate, 1.0, norms)
    unit = centered / safe
    values = np.clip(unit.T @ unit, -1.0, 1.0)
    values[degenerate, :] = 0.0
    values[:, degenerate] = 0.0
    return CooccurrenceResult(values=values, degenerate_columns=degenerate)


def top_frequencies(freq, top_n) -> list:
    """Column indices and values of the top_n largest frequencies,
    ties broken by column index."""
    freq = np.asarray(freq, dtype=float)
    order = np.argsort(-freq, kind="stable")[: max(0, int(top_n))]
    return [(int(j), float(freq[j])) for j in order]


def top_pairs(values, top_n) -> list:
    """Distinct column pairs (i < j) with the largest co-occurrence,
    ties broken by pair index."""
    values = models.as_matrix(values, "cooccurrence")
    k = values.shape[0]
    if values.shape != (k, k):
        raise DataError("co-occurrence matrix must be square")
    iu, ju = np.triu_indices(k, 1)
    vals = values[iu, ju]
    order = np.argsort(-vals, kind="stable")[: max(0, int(top_n))]
    return [(int(iu[t]), int(ju[t]), float(vals[t])) for t in order]
