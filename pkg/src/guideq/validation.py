"""Input validation helpers shared by the numeric modules."""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError


def as_float_vector(value, name: str, length: int | None = None) -> np.ndarray:
    """Coerce to a read-only float64 1-D array, checking shape and finiteness.

    Raises DimensionError on a length mismatch and DomainError on NaN/inf.
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def require_finite(value: float, name: str) -> float:
    """Return value as float, rejecting NaN/inf."""
    out = float(value)
    if not np.isfinite(out):
        raise DomainError(f"{name} must be finite, got {out!r}")
    return out


def require_positive(value: float, name: str) -> float:
    out = require_finite(value, name)
    if out <= 0.0:
        raise DomainError(f"{name} must be > 0, got {out!r}")
    return out


def require_in_open_unit(value: float, name: str) -> float:
    out = require_finite(value, name)
    if not 0.0 < out < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {out!r}")
    return out
