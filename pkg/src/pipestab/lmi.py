"""Assembly of the decay-rate matrix inequality.

For projection order N and an extended ODE of dimension m = n + 2, the
inequality lives on the coordinate vector

    xi = [X, X_0, ..., X_N, dwt(1), dwt(0)]   (dimension m + 2(N+1) + 2)

where X_ell are the Legendre projections of the characteristic field and dwt
the boundary-velocity deviations.  Constant matrices map xi to the stacked
state (selector), its time derivative (dynamics) and the boundary traces of
the characteristic field (chi0_map, chi1_map).  Feasibility of

    lmi_matrix(problem, vars, alpha) < 0   with P, R, S > 0

certifies exponential decay at rate alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .legendre import build_structural
from .model import ClosedLoop, PlantParams

_SYM_TOL = 1e-12


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class LmiProblem:
    """Constant data of the inequality at a fixed projection order."""

    N: int
    m: int            # extended ODE dimension n + 2
    p: int            # projection block size 2(N+1)
    dim: int          # m + p + 2
    c: float          # wave speed
    selector: np.ndarray = field(repr=False)   # (m+p) x dim, [I 0]
    dynamics: np.ndarray = field(repr=False)   # (m+p) x dim
    chi0_map: np.ndarray = field(repr=False)   # 2 x dim, xi -> chi(0)
    chi1_map: np.ndarray = field(repr=False)   # 2 x dim, xi -> chi(1)

    def bessel_weight_matrix(self, R: np.ndarray) -> np.ndarray:
        """Block diagonal dim x dim matrix diag(0_m, R, 3R, ..., (2N+1)R, 0_2)."""
        out = np.zeros((self.dim, self.dim))
        for ell in range(self.N + 1):
            i = self.m + 2 * ell
            out[i:i + 2, i:i + 2] = (2 * ell + 1) * R
        return out


@dataclass(frozen=True)
class DecisionVars:
    """Symmetric decision matrices (P on the stacked state, R and S 2x2)."""

    P: np.ndarray
    R: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        for name in ("P", "R", "S"):
            M = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if M.shape[0] != M.shape[1]:
                raise InputError(f"{name} must be square, got {M.shape}")
            if name in ("R", "S") and M.shape != (2, 2):
                raise InputError(f"{name} must be 2x2, got {M.shape}")
            scale = max(1.0, float(np.abs(M).max()))
            if np.abs(M - M.T).max() > _SYM_TOL * scale:
                raise InputError(f"{name} is not symmetric")
            object.__setattr__(self, name, _sym(M))

    def scaled(self, factor: float) -> "DecisionVars":
        return DecisionVars(self.P * factor, self.R * factor, self.S * factor)

    @property
    def trace_sum(self) -> float:
        return float(np.trace(self.P) + np.trace(self.R) + np.trace(self.S))


def assemble(N: int, cl: ClosedLoop, plant: PlantParams) -> LmiProblem:
    """Build the constant matrices of the inequality at projection order N."""
    if N < 0:
        raise InputError(f"order must be >= 0, got {N}")
    m = cl.m
    p = 2 * (N + 1)
    dim = m + p + 2
    c = plant.c
    cg_row = c * plant.g * cl.C1        # 1 x m

    selector = np.hstack([np.eye(m + p), np.zeros((m + p, 2))])
    ode_rows = np.hstack([cl.A, np.zeros((m, p)), cl.B])
    chi0_map = np.hstack([np.vstack([-cg_row, np.zeros((1, m))]),
                          np.zeros((2, p)), cl.chi0_gain])
    chi1_map = np.hstack([np.vstack([np.zeros((1, m)), cg_row]),
                          np.zeros((2, p)), cl.chi1_gain])
    L, ones, alt_ones = build_structural(N)
    # time derivative of the projection stack, transport at speed c
    proj_rows = (c * ones @ chi1_map - c * alt_ones @ chi0_map
                 - np.hstack([np.zeros((p, m)), c * L, np.zeros((p, 2))]))
    dynamics = np.vstack([ode_rows, proj_rows])
    return LmiProblem(N=N, m=m, p=p, dim=dim, c=c,
                      selector=selector, dynamics=dynamics,
                      chi0_map=chi0_map, chi1_map=chi1_map)


def decay_form(problem: LmiProblem, vars: DecisionVars, alpha: float) -> np.ndarray:
    """Quadratic form bounding d/dt V + 2*alpha*V before the projection slack.

    Affine and homogeneous of degree 1 in (P, R, S); exactly symmetric.
    """
    if vars.P.shape != (problem.m + problem.p,) * 2:
        raise InputError(f"P must be {problem.m + problem.p}x{problem.m + problem.p} "
                         f"for this problem, got {vars.P.shape}")
    F, Z = problem.selector, problem.dynamics
    G0, G1 = problem.chi0_map, problem.chi1_map
    c = problem.c
    half = (Z + alpha * F).T @ vars.P @ F
    out = (half + half.T
           - c * (G0.T @ vars.S @ G0)
           + c * math.exp(2.0 * alpha / c) * (G1.T @ (vars.S + vars.R) @ G1))
    return _sym(out)


def lmi_matrix(problem: LmiProblem, vars: DecisionVars, alpha: float) -> np.ndarray:
    """Matrix whose negative definiteness certifies decay at rate alpha."""
    return decay_form(problem, vars, alpha) - problem.c * problem.bessel_weight_matrix(vars.R)


def dump_matrices(problem: LmiProblem, path) -> None:
    """Write all structural matrices in a plain-text row-major format.

    Layout: `scalar <name> <value>` lines followed by `matrix <name> <rows>
    <cols>` headers, each with one space-separated row per line (17 significant
    digits), for cross-checking against an independent implementation.
    """
    with open(path, "w") as fh:
        fh.write("# pipestab matrix dump\n")
        for name in ("N", "m", "p", "dim"):
            fh.write(f"scalar {name} {getattr(problem, name)}\n")
        fh.write(f"scalar wave_speed {problem.c!r}\n")
        mats = {
            "selector": problem.selector,
            "dynamics": problem.dynamics,
            "chi0_map": problem.chi0_map,
            "chi1_map": problem.chi1_map,
            "bessel_weights_unit": problem.bessel_weight_matrix(np.eye(2)),
        }
        for name, M in mats.items():
            fh.write(f"matrix {name} {M.shape[0]} {M.shape[1]}\n")
            for row in M:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
