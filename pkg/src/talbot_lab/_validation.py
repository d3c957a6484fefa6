"""Small argument checks shared by the public functions."""

import numbers

import numpy as np

from .errors import DomainError


def as_float_array(value, name):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


def check_positive(value, name):
    arr = as_float_array(value, name)
    if not np.all(arr > 0):
        raise DomainError(f"{name} must be > 0, got {value!r}")
    return arr


def check_nonnegative(value, name):
    arr = as_float_array(value, name)
    if not np.all(arr >= 0):
        raise DomainError(f"{name} must be >= 0, got {value!r}")
    return arr


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def scalar_or_array(arr):
    """Return a Python float for 0-d results, the array otherwise."""
    arr = np.asarray(arr)
    if arr.ndim == 0:
        return arr.item()
    return arr
