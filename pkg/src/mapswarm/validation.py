"""Input validation helpers shared by the estimators and the simulation."""
from __future__ import annotations

import numbers

import numpy as np


def check_points(X, name: str = "X", allow_empty: bool = True) -> np.ndarray:
    """Return ``X`` as a float (n, 2) array of finite planar points."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        if not allow_empty:
            raise ValueError(f"{name} must contain at least one point")
        return X.reshape(0, 2)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or infinity")
    return X


def check_point(q, name: str = "q") -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (2,) or not np.all(np.isfinite(q)):
        raise ValueError(f"{name} must be a finite 2-vector, got {q!r}")
    return q


def check_positive(value, name: str, integer: bool = False):
    if integer:
        if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(value)
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return float(value)
