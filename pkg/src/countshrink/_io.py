"""File formats: headerless CSV matrices and deterministic JSON.

Reals are written as their shortest round-trip decimal, counts as bare
integers. JSON is emitted with sorted keys and fixed indentation and
holds no timestamps, so rerunning a command reproduces files byte for
byte. Non-finite reals are encoded as strings in JSON ('inf', 'nan')
and as 'inf'/'-inf'/'nan' cells in CSV.
"""

import json
import math

import numpy as np

from .exceptions import DataError


def fmt_float(v) -> str:
    v = float(v)
    if math.isfinite(v):
        return repr(v)
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def json_safe(obj):
    if isinstance(obj, dict):
        return {str(key): json_safe(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(val) for val in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else fmt_float(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    return obj


def json_text(payload) -> str:
    return json.dumps(json_safe(payload), indent=2, sort_keys=True) + "\n"


def int_matrix_text(matrix) -> str:
    matrix = np.asarray(matrix)
    rows = [",".join(str(int(v)) for v in row) for row in matrix]
    return "\n".join(rows) + "\n"


def float_matrix_text(matrix) -> str:
    matrix = np.asarray(matrix, dtype=float)
    rows = [",".join(fmt_float(v) for v in row) for row in matrix]
    return "\n".join(rows) + "\n"


def int_vector_text(vector) -> str:
    return "\n".join(str(int(v)) for v in np.asarray(vector)) + "\n"


def read_matrix(path, name="matrix") -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except OSError as e:
        raise DataError(f"cannot read {name} file {path}: {e}")
    except ValueError as e:
        raise DataError(f"malformed {name} file {path}: {e}")
    if arr.size == 0:
        raise DataError(f"{name} file {path} is empty")
    return arr


def read_count_matrix(path) -> np.ndarray:
    arr = read_matrix(path, "counts")
    if (arr < 0).any():
        raise DataError(f"counts file {path} has negative entries")
    if not np.array_equal(arr, np.floor(arr)):
        raise DataError(f"counts file {path} has non-integer entries")
    return arr


def read_vector(path, name="vector") -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=1, dtype=float)
    except OSError as e:
        raise DataError(f"cannot read {name} file {path}: {e}")
    except ValueError as e:
        raise DataError(f"malformed {name} file {path}: {e}")
    if arr.ndim != 1 or arr.size == 0:
        raise DataError(f"{name} file {path} must hold one value per line")
    return arr
