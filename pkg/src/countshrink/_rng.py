"""Deterministic random streams and count samplers.

All randomness in the package flows through Philox (a counter-based
bit generator) seeded by a SeedSequence built from (seed, stream tag,
coordinates). Each logical task gets its own stream, so results do not
depend on evaluation order and would survive parallel execution.

Count draws use inversion of the cumulative distribution on top of the
uniform stream rather than the generator's built-in methods: Poisson by
pmf recurrence (chunked so exp(-lam) never underflows), binomial by pmf
recurrence with the p > 1/2 reflection, multinomial rows by conditional
binomials, categorical by cumulative search. These are plain float
recurrences, so a seed reproduces the same counts on any platform.
"""

import math

import numpy as np

from .exceptions import DataError, NumericalError

RNG_ALGORITHM = "philox4x64"

# stream tags keep independent purposes on independent substreams
TAG_TOTALS = 1
TAG_COUNTS = 2
TAG_TRUTH = 3
TAG_PROBE = 4
TAG_CV = 5
TAG_DOWNSAMPLE = 6

# Poisson/binomial inversion restarts below this so pmf(0) stays normal
_CHUNK = 500


def stream(seed, *key) -> np.random.Generator:
    """Generator for the substream identified by (seed, *key)."""
    if seed is None or int(seed) < 0:
        raise DataError("seed must be a nonnegative integer")
    entropy = [int(seed)] + [int(v) for v in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _poisson_inversion(rng, lam):
    if lam <= 0:
        return 0
    u = rng.random()
    pmf = math.exp(-lam)
    cdf = pmf
    x = 0
    while u > cdf:
        x += 1
        pmf *= lam / x
        cdf += pmf
        if pmf == 0.0:  # cdf has absorbed all representable mass
            break
    return x


def poisson(rng, lam) -> int:
    """Poisson draw by CDF inversion, split into chunks of mean <= 500."""
    if lam < 0 or not np.isfinite(lam):
        raise DataError("Poisson mean must be finite and >= 0")
    total = 0
    while lam > _CHUNK:
        total += _poisson_inversion(rng, float(_CHUNK))
        lam -= _CHUNK
    return total + _poisson_inversion(rng, lam)


def _binomial_inversion(rng, n, p):
    u = rng.random()
    q = 1.0 - p
    pmf = q ** n
    cdf = pmf
    x = 0
    ratio = p / q
    while u > cdf and x < n:
        pmf *= (n - x) / (x + 1.0) * ratio
        x += 1
        cdf += pmf
        if pmf == 0.0:
            break
    return x


def binomial(rng, n, p) -> int:
    """Binomial draw by pmf-recurrence inversion.

    Reflects p > 1/2 to p <= 1/2 and splits n into chunks of at most
    500 trials so the starting pmf (1-p)^n never underflows.
    """
    n = int(n)
    if n < 0 or not 0 <= p <= 1:
        raise DataError("binomial needs n >= 0 and p in [0, 1]")
    if n == 0 or p == 0:
        return 0
    if p == 1:
        return n
    if p > 0.5:
        return n - binomial(rng, n, 1.0 - p)
    total = 0
    while n > _CHUNK:
        total += _binomial_inversion(rng, _CHUNK, p)
        n -= _CHUNK
    return total + _binomial_inversion(rng, n, p)


def multinomial_row(rng, n, probs) -> np.ndarray:
    """Multinomial draw by conditional binomials, cell by cell."""
    probs = np.asarray(probs, dtype=float)
    if (probs < 0).any() or probs.sum() <= 0:
        raise DataError("multinomial needs nonnegative probabilities with mass")
    k = probs.size
    out = np.zeros(k, dtype=np.int64)
    remaining = int(n)
    for j in range(k - 1):
        if remaining == 0:
            return out
        tail = probs[j:].sum()
        if tail <= 0:
            break
        out[j] = binomial(rng, remaining, min(1.0, probs[j] / tail))
        remaining -= out[j]
    out[k - 1] = remaining
    return out


def categorical(rng, weights) -> int:
    """Index draw proportional to nonnegative weights, by inversion."""
    c = np.cumsum(np.asarray(weights, dtype=float))
    if c[-1] <= 0:
        raise DataError("categorical needs positive total weight")
    u = rng.random() * c[-1]
    return min(int(np.searchsorted(c, u, side="right")), c.size - 1)
