"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import NonFiniteError


def check_vector(x, name="x", dim=None):
    """Return ``x`` as a finite 1-D float64 array (scalars become length 1)."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    arr = check_array(arr, ensure_2d=False, dtype=np.float64, input_name=name)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def check_matrix(A, name="A"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[np.newaxis, :]
    return check_array(A, dtype=np.float64, input_name=name)


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real, got {value!r}")
    if (strict and value <= 0) or (not strict and value < 0):
        raise ValueError(f"{name} must be {'>' if strict else '>='} 0, got {value!r}")
    return float(value)


def check_finite(v, what):
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"non-finite {what}")
    return v
