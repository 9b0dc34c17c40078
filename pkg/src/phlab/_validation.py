"""Input validation helpers shared by the solver and the estimator wrappers."""
from __future__ import annotations

import numpy as np

__all__ = ["check_field", "check_positive", "check_stack"]


def check_field(f, grid, name: str = "field", finite: bool = True) -> np.ndarray:
    """Return ``f`` as a float array of the grid's shape ``(ny, nx)``.

    Raises ``ValueError`` on a shape mismatch or on NaN/Inf entries.
    """
    arr = np.asarray(f, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {grid.shape} (ny, nx)")
    if finite and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_stack(X, grid, name: str = "X") -> np.ndarray:
    """Accept one field or a stack of fields; always return ``(n, ny, nx)``."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != grid.shape:
        raise ValueError(f"{name} must have shape (n, {grid.ny}, {grid.nx}), got {np.shape(X)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_positive(value, name: str, strict: bool = True) -> float:
    value = float(value)
    if not np.isfinite(value) or (value <= 0 if strict else value < 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value
