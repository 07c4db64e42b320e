"""Input validation helpers.

Small ``check_*`` functions in the sklearn style: normalize user input to
canonical numpy arrays and fail early with a readable message.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .irt import ItemParams


def check_param_matrix(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coerce items to (alpha, beta, c) column arrays.

    Accepts a sequence of ItemParams or an array-like of shape (n, 3) whose
    columns are alpha, beta, c. Returns three float arrays of length n.
    """
    if len(X) == 0:
        raise ValueError("expected at least one item")
    if isinstance(X[0], ItemParams):
        alphas = np.array([it.alpha for it in X], dtype=float)
        betas = np.array([it.beta for it in X], dtype=float)
        cs = np.array([it.c for it in X], dtype=float)
    else:
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected items as ItemParams or an (n, 3) array, got shape {arr.shape}")
        alphas, betas, cs = arr[:, 0], arr[:, 1], arr[:, 2]
    if not np.all(np.isfinite(alphas)) or np.any(alphas <= 0):
        raise ValueError("all alpha values must be finite and > 0")
    if np.any(cs < 0) or np.any(cs >= 1):
        raise ValueError("all c values must lie in [0, 1)")
    if not np.all(np.isfinite(betas)):
        raise ValueError("all beta values must be finite")
    return alphas, betas, cs


def check_binary(y, n: int | None = None) -> np.ndarray:
    """Coerce outcomes to an int array of 0/1 values, optionally of length n."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"outcomes must be 1-dimensional, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("outcomes must be binary (0 or 1)")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} outcomes, got {arr.shape[0]}")
    return arr.astype(int)


def check_fraction(value: float, name: str = "fraction") -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {value}")
    return value


def check_bounds(bounds: Sequence[float], name: str) -> tuple[float, float]:
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ValueError(f"{name} bounds must be ordered, got ({lo}, {hi})")
    return lo, hi


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
