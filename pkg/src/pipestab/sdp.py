"""Semidefinite feasibility solving and independent certificate verification.

The inequality system is homogeneous of degree 1 in the decision variables, so
feasibility is posed as a max-margin program under a trace normalization:

    max t   s.t.  P >= t I,  R >= t I,  S >= t I,
                  -(decay LMI) >= t I,  tr P + tr R + tr S = 1.

The verdict is taken from eigenvalue margins recomputed from scratch on the
returned variables (never from the solver's internal objective), which keeps
the feasible side sound.  `verify_certificate` repeats that check through a
plain symmetric eigendecomposition, independent of the convex solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import InputError
from .lmi import DecisionVars, LmiProblem, lmi_matrix

FEASIBLE = "feasible"
INFEASIBLE = "infeasible-at-tolerance"
FAILURE = "numerical-failure"

_SOLVER_ORDER = ("CLARABEL", "CVXOPT", "SCS")


@dataclass(frozen=True)
class SolveOptions:
    margin_tol: float = 1e-7
    solver: str | None = None
    max_iter: int = 200
    solver_tol: float = 1e-10


@dataclass(frozen=True)
class Certificate:
    """Decision variables witnessing decay at the given rate.

    `margin` is the smallest of the four eigenvalue margins after trace
    normalization; a valid certificate has margin > 0.
    """

    vars: DecisionVars
    alpha: float
    margin: float


@dataclass(frozen=True)
class FeasibilityReport:
    status: str
    certificate: Certificate | None = None
    iterations: int = 0
    residuals: dict = field(default_factory=dict)


def _pick_solver(name: str | None) -> str:
    avail = cp.installed_solvers()
    if name is not None:
        if name not in avail:
            raise InputError(f"solver {name!r} not installed (have {avail})")
        return name
    for cand in _SOLVER_ORDER:
        if cand in avail:
            return cand
    raise InputError(f"no suitable SDP solver installed (have {avail})")


def _coordinate_scales(problem: LmiProblem) -> np.ndarray:
    """Diagonal congruence scaling that tames large boundary-feedback gains.

    Controller gains like 800 enter the chi maps multiplied by c*g and then
    squared through the S and R terms, which can spread the data over many
    decades and stall interior-point solvers.  Scaling the offending ODE
    coordinates is an exact reparameterization: it changes margins but not
    feasibility, and certificates are mapped back to original coordinates.
    """
    d = np.ones(problem.dim)
    tail_mag = max(np.abs(problem.chi0_map[:, -2:]).max(),
                   np.abs(problem.chi1_map[:, -2:]).max(), 1.0)
    for j in range(problem.m):
        col = max(abs(problem.chi0_map[:, j]).max(), abs(problem.chi1_map[:, j]).max())
        if col > tail_mag:
            d[j] = tail_mag / col
    return d


def solve_feasibility(problem: LmiProblem, alpha: float,
                      opts: SolveOptions | None = None) -> FeasibilityReport:
    """Decide strict feasibility of the decay inequality at the given rate."""
    if not np.isfinite(alpha) or alpha < 0:
        raise InputError(f"alpha must be finite and >= 0, got {alpha}")
    opts = opts or SolveOptions()
    solver = _pick_solver(opts.solver)

    d = _coordinate_scales(problem)
    D = np.diag(d)
    D1_inv = np.diag(1.0 / d[:problem.m + problem.p])
    F = problem.selector            # invariant under the scaling
    Z = D1_inv @ problem.dynamics @ D
    G0 = problem.chi0_map @ D
    G1 = problem.chi1_map @ D

    s = problem.m + problem.p
    P = cp.Variable((s, s), symmetric=True)
    R = cp.Variable((2, 2), symmetric=True)
    S = cp.Variable((2, 2), symmetric=True)
    t = cp.Variable()
    c = problem.c
    half = (Z + alpha * F).T @ P @ F
    psi = half + half.T - c * G0.T @ S @ G0 \
        + c * np.exp(2.0 * alpha / c) * G1.T @ (S + R) @ G1
    weights = 0
    for ell in range(problem.N + 1):
        E = np.zeros((problem.dim, 2))
        E[problem.m + 2 * ell:problem.m + 2 * ell + 2] = np.eye(2)
        weights = weights + (2 * ell + 1) * (E @ R @ E.T)
    lmi = psi - c * weights
    constraints = [P >> t * np.eye(s), R >> t * np.eye(2), S >> t * np.eye(2),
                   -lmi >> t * np.eye(problem.dim),
                   cp.trace(P) + cp.trace(R) + cp.trace(S) == 1]
    prog = cp.Problem(cp.Maximize(t), constraints)

    solver_kwargs = {}
    if solver == "CLARABEL":
        solver_kwargs = dict(tol_gap_abs=opts.solver_tol, tol_gap_rel=opts.solver_tol,
                             tol_feas=opts.solver_tol, max_iter=opts.max_iter)
    try:
        # cvxpy warns on inaccurate solves; the eigenvalue margins below are
        # the authoritative feasibility decision, so keep the solve quiet
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            prog.solve(solver=solver, **solver_kwargs)
    except cp.error.SolverError as exc:
        return FeasibilityReport(status=FAILURE, residuals={"error": str(exc)})
    iters = getattr(prog.solver_stats, "num_iters", None) or 0
    residuals = {"t_star": None if t.value is None else float(t.value),
                 "solver": solver, "solver_status": prog.status}
    if prog.status not in ("optimal", "optimal_inaccurate") or P.value is None:
        return FeasibilityReport(status=FAILURE, iterations=iters, residuals=residuals)

    t_star = float(t.value)
    if t_star <= opts.margin_tol:
        return FeasibilityReport(status=INFEASIBLE, certificate=None,
                                 iterations=iters, residuals=residuals)
    # map back to original coordinates and normalize the trace exactly;
    # the congruence rescales eigenvalue margins but cannot change their sign
    P_orig = D1_inv @ P.value @ D1_inv
    vars = DecisionVars(P_orig, R.value, S.value)
    total = vars.trace_sum
    if total <= 0:
        return FeasibilityReport(status=FAILURE, iterations=iters, residuals=residuals)
    vars = vars.scaled(1.0 / total)
    margin = certificate_margin(problem, vars, alpha)
    residuals["margin"] = margin
    if margin <= 0:
        # solver claimed a margin the eigenvalue check cannot confirm
        return FeasibilityReport(status=FAILURE, iterations=iters, residuals=residuals)
    cert = Certificate(vars=vars, alpha=alpha, margin=margin)
    return FeasibilityReport(status=FEASIBLE, certificate=cert,
                             iterations=iters, residuals=residuals)


def certificate_margin(problem: LmiProblem, vars: DecisionVars, alpha: float) -> float:
    """Smallest of the four eigenvalue margins, recomputed from scratch."""
    return float(min(
        np.linalg.eigvalsh(vars.P).min(),
        np.linalg.eigvalsh(vars.R).min(),
        np.linalg.eigvalsh(vars.S).min(),
        -np.linalg.eigvalsh(lmi_matrix(problem, vars, alpha)).max(),
    ))


def verify_certificate(problem: LmiProblem, cert: Certificate, tol: float) -> bool:
    """Independent eigenvalue check of all four inequalities at margin tol."""
    if cert.vars.P.shape != (problem.m + problem.p,) * 2:
        raise InputError(
            f"certificate P has shape {cert.vars.P.shape}, problem wants "
            f"{(problem.m + problem.p,) * 2}")
    lam_P = np.linalg.eigvalsh(cert.vars.P).min()
    lam_R = np.linalg.eigvalsh(cert.vars.R).min()
    lam_S = np.linalg.eigvalsh(cert.vars.S).min()
    lam_M = np.linalg.eigvalsh(lmi_matrix(problem, cert.vars, cert.alpha)).max()
    return bool(lam_P >= tol and lam_R >= tol and lam_S >= tol and lam_M <= -tol)


def export_instance(problem: LmiProblem, cert: Certificate, path) -> None:
    """Dump structural matrices plus the certificate in plain text."""
    from .lmi import dump_matrices

    dump_matrices(problem, path)
    with open(path, "a") as fh:
        fh.write(f"scalar alpha {cert.alpha!r}\n")
        fh.write(f"scalar margin {cert.margin!r}\n")
        for name in ("P", "R", "S"):
            M = getattr(cert.vars, name)
            fh.write(f"matrix {name} {M.shape[0]} {M.shape[1]}\n")
            for row in M:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
