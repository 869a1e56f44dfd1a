"""Synthetic data scenarios for the estimators and risk tools.

Three scenarios:

* ``sinusoid``: a deterministic composition matrix built from a smooth
  oscillation, mixed with a uniform floor so every entry is positive.
* ``lowrank``: a random composition matrix of rank at most ``rank``
  from nonnegative factors; the column factor adds a per-factor base
  level drawn once, which keeps the product strictly positive (a
  regeneration guard remains for safety).
* ``poisson-sinusoid``: a latent oscillation of the given amplitude
  mapped through exp, used as a Poisson intensity matrix.

Counts are then drawn with the samplers in :mod:`countshrink._rng`:
row totals as zero-truncated Poisson, multinomial rows by conditional
binomials, Poisson entries by inversion. Each row uses its own derived
stream, so matrices are reproducible entry-for-entry from the seed.
"""

from dataclasses import dataclass, asdict

import numpy as np

from . import _rng, models
from .exceptions import DataError, NumericalError

SCENARIOS = ("sinusoid", "lowrank", "poisson-sinusoid")

# the lowrank scenario's column factors: small half-normal jitter on a
# per-factor base level, making every product entry positive
LOWRANK_V_NOTE = "V[j,l] = 0.1|N(0,1)| + b_l, b_l ~ U[0.5, 1.5] shared per factor"


def sinusoid_composition(m, k) -> np.ndarray:
    """Composition with rows 1/(10k) + (9/10) A_i / sum(A_i) where
    A_ij = exp(10 cos(6 pi i / k) sin(6 pi j / k)), indices 1-based."""
    if m < 1 or k < 2:
        raise DataError("need m >= 1 and k >= 2")
    i = np.arange(1, m + 1)[:, None]
    j = np.arange(1, k + 1)[None, :]
    a = np.exp(10.0 * np.cos(6.0 * np.pi * i / k) * np.sin(6.0 * np.pi * j / k))
    return 1.0 / (10.0 * k) + 0.9 * a / a.sum(axis=1, keepdims=True)


def random_lowrank_composition(m, k, rank=20, seed=0, rng=None) -> np.ndarray:
    """Row-normalized W = U V^T with U = |N(0,1)| and V as in
    LOWRANK_V_NOTE; redrawn until all entries of W are positive."""
    if m < 1 or k < 2:
        raise DataError("need m >= 1 and k >= 2")
    if rank < 1:
        raise DataError("rank must be >= 1")
    if rng is None:
        rng = _rng.stream(seed, _rng.TAG_TRUTH)
    for _ in range(100):
        u = np.abs(rng.normal(size=(m, rank)))
        base = rng.uniform(0.5, 1.5, size=rank)
        v = 0.1 * np.abs(rng.normal(size=(k, rank))) + base[None, :]
        w = u @ v.T
        if (w > 0).all():
            return w / w.sum(axis=1, keepdims=True)
    raise NumericalError("no strictly positive factor product in 100 draws")


def sinusoid_latent(m, k, amplitude=5.0) -> np.ndarray:
    """Latent Z_ij = amplitude cos(6 pi i / k) sin(6 pi j / k), 1-based."""
    if m < 1 or k < 2:
        raise DataError("need m >= 1 and k >= 2")
    i = np.arange(1, m + 1)[:, None]
    j = np.arange(1, k + 1)[None, :]
    return amplitude * np.cos(6.0 * np.pi * i / k) * np.sin(6.0 * np.pi * j / k)


def sample_row_totals(m, n0, seed=0) -> np.ndarray:
    """Zero-truncated Poisson(n0) totals, one per row, row streams."""
    if m < 1:
        raise DataError("need m >= 1")
    if not n0 > 0:
        raise DataError("n0 must be positive")
    out = np.zeros(m, dtype=np.int64)
    for i in range(m):
        rng = _rng.stream(seed, _rng.TAG_TOTALS, i)
        for _ in range(10000):
            n = _rng.poisson(rng, float(n0))
            if n >= 1:
                out[i] = n
                break
        else:
            raise NumericalError("zero-truncated Poisson rejected 10000 draws")
    return out


def sample_counts(model, truth, row_totals=None, seed=0) -> np.ndarray:
    """Draw a count matrix from the model at the given mean parameters.

    Poisson takes an intensity matrix and no totals; multinomial takes
    a composition matrix plus integer totals, one per row. Passing
    totals to Poisson, or omitting them for multinomial, is an error.
    Row i is drawn from its own substream of the seed.
    """
    model = models.as_model(model)
    if model is models.Model.POISSON:
        if row_totals is not None:
            raise DataError("row totals do not apply to the Poisson model")
        x = models.check_intensity(truth)
        m, k = x.shape
        out = np.zeros((m, k), dtype=np.int64)
        for i in range(m):
            rng = _rng.stream(seed, _rng.TAG_COUNTS, i)
            for j in range(k):
                out[i, j] = _rng.poisson(rng, x[i, j])
        return out
    p = models.check_composition(truth)
    if row_totals is None:
        raise DataError("the multinomial model needs row totals")
    totals = np.asarray(row_totals)
    if totals.ndim != 1 or totals.shape[0] != p.shape[0]:
        raise DataError("row totals must be a vector with one entry per row")
    if (totals < 1).any() or not np.array_equal(totals, totals.astype(np.int64)):
        raise DataError("row totals must be integers >= 1")
    out = np.zeros(p.shape, dtype=np.int64)
    for i in range(p.shape[0]):
        rng = _rng.stream(seed, _rng.TAG_COUNTS, i)
        out[i] = _rng.multinomial_row(rng, int(totals[i]), p[i])
    return out


@dataclass
class SimSpec:
    """One simulation scenario with its dimensions and seed."""

    scenario: str
    m: int
    k: int
    n0: float = 10.0
    rank: int = 20
    amplitude: float = 5.0
    seed: int = 0

    def validate(self):
        if self.scenario not in SCENARIOS:
            raise DataError(f"scenario must be one of {SCENARIOS}")
        if self.m < 1 or self.k < 2:
            raise DataError("need m >= 1 and k >= 2")
        if not self.n0 > 0:
            raise DataError("n0 must be positive")
        if self.rank < 1:
            raise DataError("rank must be >= 1")
        if int(self.seed) < 0:
            raise DataError("seed must be nonnegative")

    def to_dict(self):
        return asdict(self)


@dataclass
class SimData:
    model: models.Model
    truth: np.ndarray
    row_totals: np.ndarray | None
    counts: np.ndarray


def generate(spec: SimSpec) -> SimData:
    """Build the truth for the scenario and draw one count matrix."""
    spec.validate()
    if spec.scenario == "poisson-sinusoid":
        x = np.exp(sinusoid_latent(spec.m, spec.k, spec.amplitude))
        counts = sample_counts(models.Model.POISSON, x, None, spec.seed)
        return SimData(models.Model.POISSON, x, None, counts)
    if spec.scenario == "sinusoid":
        p = sinusoid_composition(spec.m, spec.k)
    else:
        p = random_lowrank_composition(spec.m, spec.k, spec.rank, seed=spec.seed)
    totals = sample_row_totals(spec.m, spec.n0, spec.seed)
    counts = sample_counts(models.Model.MULTINOMIAL, p, totals, spec.seed)
    return SimData(models.Model.MULTINOMIAL, p, totals, counts)
