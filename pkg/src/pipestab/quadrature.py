"""Composite Simpson quadrature on uniform grids with an odd number of points."""

from __future__ import annotations

import numpy as np

from .errors import InputError


def simpson_weights(n_points: int, dx: float) -> np.ndarray:
    """Weight vector w such that w @ f approximates the integral of f.

    Requires an odd number of points (even number of intervals).
    """
    if n_points < 3:
        raise InputError(f"Simpson quadrature needs at least 3 samples, got {n_points}")
    if n_points % 2 == 0:
        raise InputError(f"Simpson quadrature needs an odd number of samples, got {n_points}")
    w = np.full(n_points, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (dx / 3.0)


def simpson(values: np.ndarray, dx: float) -> float | np.ndarray:
    """Integrate sampled values along their first axis."""
    values = np.asarray(values, dtype=float)
    w = simpson_weights(values.shape[0], dx)
    return np.tensordot(w, values, axes=(0, 0))
