"""Shifted Legendre basis on [0, 1], projections and the Bessel-type bound.

The family L_0, L_1, ... is orthogonal with int_0^1 L_j L_k = delta_jk/(2k+1),
L_ell(1) = 1 and L_ell(0) = (-1)^ell.  Degrees are small here (<= 8 supported),
so polynomials are evaluated from their exact monomial coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InputError
from .quadrature import simpson, simpson_weights

MAX_DEGREE = 12


@lru_cache(maxsize=None)
def legendre_coeffs(ell: int) -> tuple[float, ...]:
    """Monomial coefficients (ascending) of the degree-ell shifted polynomial.

    L_ell(x) = (-1)^ell * sum_l (-1)^l C(ell,l) C(ell+l,l) x^l.
    """
    if not 0 <= ell <= MAX_DEGREE:
        raise InputError(f"degree must be in [0, {MAX_DEGREE}], got {ell}")
    sign = (-1) ** ell
    return tuple(float(sign * (-1) ** l * comb(ell, l) * comb(ell + l, l))
                 for l in range(ell + 1))


def eval_legendre(ell: int, x):
    """Evaluate the degree-ell shifted Legendre polynomial at x in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise InputError("argument outside [0, 1]")
    coeffs = legendre_coeffs(ell)
    out = np.full_like(x, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        out = out * x + c
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class LegendreBasis:
    """Coefficient table for degrees 0..N."""

    N: int

    @property
    def coeffs(self) -> list[tuple[float, ...]]:
        return [legendre_coeffs(ell) for ell in range(self.N + 1)]

    def eval(self, ell: int, x):
        if ell > self.N:
            raise InputError(f"degree {ell} exceeds basis order {self.N}")
        return eval_legendre(ell, x)


def deriv_coeff(k: int, j: int) -> float:
    """Coefficient of L_j in the expansion of dL_k/dx; zero for j > k."""
    if j > k:
        return 0.0
    return (2 * j + 1) * (1.0 - (-1.0) ** (j + k))


def build_structural(N: int):
    """Block matrices coupling the first N+1 projections of a 2-vector field.

    Returns (L, ones, alt_ones):
      L        2(N+1) x 2(N+1), block (k, j) = deriv_coeff(k, j) * I2
               (strictly block lower triangular since deriv_coeff(k, k) = 0),
      ones     2(N+1) x 2, stacked I2,
      alt_ones 2(N+1) x 2, stacked (-1)^ell * I2.
    """
    if N < 0:
        raise InputError(f"order must be >= 0, got {N}")
    eye2 = np.eye(2)
    p = 2 * (N + 1)
    L = np.zeros((p, p))
    for k in range(N + 1):
        for j in range(k + 1):
            L[2 * k:2 * k + 2, 2 * j:2 * j + 2] = deriv_coeff(k, j) * eye2
    ones = np.tile(eye2, (N + 1, 1))
    alt_ones = np.vstack([(-1.0) ** ell * eye2 for ell in range(N + 1)])
    return L, ones, alt_ones


def _check_samples(chi: np.ndarray) -> np.ndarray:
    chi = np.asarray(chi, dtype=float)
    if chi.ndim != 2 or chi.shape[1] != 2:
        raise InputError(f"expected (n, 2) samples, got shape {chi.shape}")
    if chi.shape[0] < 2:
        raise InputError("need at least 2 samples")
    return chi


def project(chi: np.ndarray, ell: int) -> np.ndarray:
    """Projection of a sampled 2-vector field on the degree-ell polynomial.

    `chi` holds samples on a uniform grid over [0, 1] (odd count, Simpson).
    """
    chi = _check_samples(chi)
    n = chi.shape[0]
    dx = 1.0 / (n - 1)
    x = np.linspace(0.0, 1.0, n)
    vals = eval_legendre(ell, x)
    return simpson(chi * vals[:, None], dx)


def project_stack(chi: np.ndarray, N: int) -> np.ndarray:
    """Flattened stack of projections for degrees 0..N, length 2(N+1)."""
    chi = _check_samples(chi)
    n = chi.shape[0]
    dx = 1.0 / (n - 1)
    x = np.linspace(0.0, 1.0, n)
    w = simpson_weights(n, dx)
    out = np.empty(2 * (N + 1))
    for ell in range(N + 1):
        out[2 * ell:2 * ell + 2] = (w * eval_legendre(ell, x)) @ chi
    return out


def bessel_gap(chi: np.ndarray, R: np.ndarray, N: int) -> float:
    """Slack of the projection lower bound on the weighted L2 norm.

    Returns int chi^T R chi dx - sum_{ell<=N} (2 ell + 1) X_ell^T R X_ell,
    which is nonnegative (up to quadrature error) for symmetric positive R.
    """
    chi = _check_samples(chi)
    R = np.asarray(R, dtype=float)
    if R.shape != (2, 2):
        raise InputError(f"R must be 2x2, got {R.shape}")
    if not np.allclose(R, R.T, atol=1e-12):
        raise InputError("R must be symmetric")
    if np.linalg.eigvalsh(R).min() <= 0:
        raise InputError("R must be positive definite")
    n = chi.shape[0]
    dx = 1.0 / (n - 1)
    lhs = float(simpson(np.einsum("ni,ij,nj->n", chi, R, chi), dx))
    stack = project_stack(chi, N)
    rhs = sum((2 * ell + 1) * stack[2 * ell:2 * ell + 2] @ R @ stack[2 * ell:2 * ell + 2]
              for ell in range(N + 1))
    return lhs - float(rhs)
