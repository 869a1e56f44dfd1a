"""Exception types shared across the package.

DataError covers malformed or degenerate inputs (wrong shapes, negative
counts, empty rows). NumericalError covers failures of the numerics
themselves (divergent iterations, SVD breakdown, rejected sampling).
The CLI maps them to distinct exit codes.
"""


class DataError(ValueError):
    """Input data violates a documented precondition."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or diverged."""
