"""Input checks shared by the decoders and estimators."""

from __future__ import annotations

import numpy as np

__all__ = ["check_bit_vector", "check_bit_matrix", "check_priors"]


def check_bit_vector(x, length: int, name: str = "x") -> np.ndarray:
    """Return ``x`` as a 1-d uint8 array of 0/1 entries with the given length."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if arr.dtype != np.uint8:
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} must contain only 0 and 1")
        arr = arr.astype(np.uint8)
    elif arr.size and arr.max() > 1:
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr


def check_bit_matrix(x, width: int, name: str = "X") -> np.ndarray:
    """Return ``x`` as a 2-d uint8 array with ``width`` columns."""
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{name} must have shape (n, {width}), got {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8, copy=False)


def check_priors(priors, length: int, upper: float = 1.0) -> np.ndarray:
    """Probabilities in ``(0, upper)`` as a float64 array."""
    p = np.asarray(priors, dtype=np.float64)
    if p.shape != (length,):
        raise ValueError(f"priors must have shape ({length},), got {p.shape}")
    if p.size and not ((p > 0.0).all() and (p < upper).all()):
        bad = int(np.flatnonzero(~((p > 0.0) & (p < upper)))[0])
        raise ValueError(f"prior {bad} = {p[bad]} outside (0, {upper})")
    return p
