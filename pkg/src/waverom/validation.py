"""Input validation helpers.

Small checks shared by the estimators and the functional API. They accept
either ``SpatiotemporalField`` instances or plain 2D arrays so the algorithms
compose with ordinary numpy workflows.
"""

from __future__ import annotations

import numbers

import numpy as np


def check_positive(value, name, strict=True):
    """Validate a scalar is positive (or non-negative when ``strict=False``)."""
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_int(value, name, minimum=None, maximum=None):
    """Validate an integer, optionally bounded on either side."""
    if not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_field_values(values, name="values"):
    """Validate a (T, K) snapshot matrix: 2D, finite, T >= 2, K >= 2."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D (time rows, space columns), got ndim={arr.ndim}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(f"{name} must be at least 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_values(data, name="data"):
    """Return the (T, K) array behind a field-like input.

    Accepts a ``SpatiotemporalField`` (anything exposing ``.values``) or a 2D
    array-like.
    """
    values = getattr(data, "values", data)
    return check_field_values(values, name=name)


def as_series(data, name="series"):
    """Return a 1D float array, rejecting non-finite entries."""
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr
