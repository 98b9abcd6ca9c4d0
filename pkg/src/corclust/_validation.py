"""Input validation helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce X (array-like or an object with a ``values`` matrix) to a 2-D
    float64 array with at least one row and column, rejecting NaN/Inf."""
    if hasattr(X, "values") and not isinstance(X, np.ndarray):
        X = X.values
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_count(value, name: str, minimum: int = 0) -> int:
    if not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_unit_interval(X: np.ndarray, name: str = "X") -> None:
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError(f"{name} entries must lie in [0, 1] for the KL distance")


def resolve_seed(random_state) -> int:
    """Turn a seed / RandomState / None into a concrete integer seed."""
    if random_state is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    if isinstance(random_state, numbers.Integral):
        return int(random_state)
    if isinstance(random_state, np.random.RandomState):
        return int(random_state.randint(0, 2**31 - 1))
    if isinstance(random_state, np.random.Generator):
        return int(random_state.integers(0, 2**31 - 1))
    raise ValueError(f"cannot derive a seed from {random_state!r}")
