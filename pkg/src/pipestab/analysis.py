"""Certified decay rates by bisection, order hierarchy tables and Lyapunov values."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import InputError, SolverFailure
from .lmi import assemble
from .model import ControllerParams, PlantParams, build_closed_loop
from .legendre import project_stack
from .quadrature import simpson
from .sdp import (FEASIBLE, INFEASIBLE, Certificate, SolveOptions,
                  solve_feasibility, verify_certificate)

CERTIFIED = "certified"
NO_CERTIFICATE = "no-certificate"
FAILED = "failed"


@dataclass(frozen=True)
class DecayResult:
    """Outcome of the certified-supremum search at one projection order.

    alpha_N is the last verified-feasible rate (never a midpoint); bracket is
    the final (lo, hi) with lo feasible and hi infeasible at tolerance.
    """

    N: int
    status: str
    alpha_N: float | None
    bracket: tuple[float, float]
    certificate: Certificate | None
    iterations: int
    alpha_max: float
    detail: str = ""


@dataclass(frozen=True)
class HierarchyTable:
    """Certified rates per controller and projection order."""

    labels: tuple[str, ...]
    N_max: int
    cells: dict = field(repr=False)      # (label, N) -> DecayResult
    alpha_max: float

    def row(self, label: str) -> list[DecayResult]:
        return [self.cells[label, N] for N in range(self.N_max + 1)]

    def row_monotone(self, label: str, slack: float = 1e-4) -> bool:
        """Hierarchy check: certified rates never drop by more than slack."""
        vals = [r.alpha_N for r in self.row(label) if r.status == CERTIFIED]
        return all(b >= a - slack for a, b in zip(vals, vals[1:]))


def necessary_condition(plant: PlantParams, ctrl: ControllerParams, alpha: float) -> bool:
    """Fast pre-filter: rates above the reflection bound are never feasible.

    The bound depends only on the plant (ctrl is accepted for interface
    uniformity).
    """
    del ctrl
    return alpha <= model.alpha_max(plant)


def _default_cap(cl) -> float:
    abscissa = float(np.linalg.eigvals(cl.A).real.max())
    return 10.0 * abs(abscissa) + 1.0


def max_decay_rate(plant: PlantParams, ctrl: ControllerParams, N: int, tol: float,
                   cap: float | None = None,
                   opts: SolveOptions | None = None) -> DecayResult:
    """Bisection for the largest certifiable decay rate at projection order N."""
    if tol <= 0:
        raise InputError(f"tolerance must be positive, got {tol}")
    opts = opts or SolveOptions()
    cl = build_closed_loop(plant, ctrl)
    problem = assemble(N, cl, plant)
    amax = model.alpha_max(plant)

    def feasible(alpha: float) -> Certificate | None:
        report = solve_feasibility(problem, alpha, opts)
        if report.status == FEASIBLE:
            cert = report.certificate
            if not verify_certificate(problem, cert, cert.margin / 2.0):
                raise SolverFailure(
                    f"solver returned an unverifiable certificate at alpha={alpha}")
            return cert
        if report.status == INFEASIBLE:
            return None
        raise SolverFailure(f"solver failed at alpha={alpha}: {report.residuals}")

    iterations = 1
    cert = feasible(0.0)
    if cert is None:
        hi0 = amax if math.isfinite(amax) else (cap or _default_cap(cl))
        return DecayResult(N=N, status=NO_CERTIFICATE, alpha_N=None,
                           bracket=(0.0, hi0), certificate=None,
                           iterations=iterations, alpha_max=amax,
                           detail="no certificate of asymptotic stability at this order")
    lo = 0.0
    if math.isfinite(amax):
        hi = amax if cap is None else min(cap, amax)
    else:
        hi = cap or _default_cap(cl)
    # rates at alpha_max itself are never strictly feasible, so the bracket is
    # valid there without a solve; a user cap below it must be probed.
    if hi < amax or not math.isfinite(amax):
        for _ in range(40):
            iterations += 1
            cert_hi = feasible(hi)
            if cert_hi is None:
                break
            lo, cert = hi, cert_hi
            hi = min(2.0 * hi, amax) if math.isfinite(amax) else 2.0 * hi
            if hi == amax:
                break
        else:
            raise SolverFailure(f"could not bracket the supremum below cap {hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        iterations += 1
        cert_mid = feasible(mid)
        if cert_mid is not None:
            lo, cert = mid, cert_mid
        else:
            hi = mid
    return DecayResult(N=N, status=CERTIFIED, alpha_N=lo, bracket=(lo, hi),
                       certificate=cert, iterations=iterations, alpha_max=amax)


def hierarchy_table(plant: PlantParams, ctrls, N_max: int, tol: float,
                    opts: SolveOptions | None = None) -> HierarchyTable:
    """Certified rates for every (controller, order <= N_max) pair.

    Solver failures are recorded per cell and do not abort the table.
    """
    if N_max > 8:
        raise InputError(f"orders above 8 are not supported, got N_max={N_max}")
    cells = {}
    labels = []
    for label, ctrl in ctrls:
        labels.append(label)
        for N in range(N_max + 1):
            try:
                cells[label, N] = max_decay_rate(plant, ctrl, N, tol, opts=opts)
            except SolverFailure as exc:
                cells[label, N] = DecayResult(
                    N=N, status=FAILED, alpha_N=None, bracket=(0.0, 0.0),
                    certificate=None, iterations=0,
                    alpha_max=model.alpha_max(plant), detail=str(exc))
    return HierarchyTable(labels=tuple(labels), N_max=N_max, cells=cells,
                          alpha_max=model.alpha_max(plant))


def format_table(table: HierarchyTable) -> str:
    """Aligned plain-text rendering of a hierarchy table."""
    width = max(12, *(len(l) for l in table.labels))
    header = "controller".ljust(width) + "".join(
        f"  {'N=' + str(N):<7}" for N in range(table.N_max + 1)) + "  alpha_max"
    lines = [header]
    for label in table.labels:
        parts = [label.ljust(width)]
        for r in table.row(label):
            cell = f"{r.alpha_N:.4f}" if r.status == CERTIFIED else "--"
            parts.append(f"  {cell:<7}")
        parts.append(f"  {table.alpha_max:.4f}")
        lines.append("".join(parts))
    return "\n".join(lines)


def table_to_csv(table: HierarchyTable, path) -> None:
    """CSV emission, one (controller, order) pair per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["controller", "N", "alpha_N", "alpha_max", "margin", "iterations"])
        for label in table.labels:
            for r in table.row(label):
                alpha = f"{r.alpha_N:.17g}" if r.alpha_N is not None else ""
                margin = (f"{r.certificate.margin:.17g}"
                          if r.certificate is not None else "")
                writer.writerow([label, r.N, alpha, f"{table.alpha_max:.17g}",
                                 margin, r.iterations])


def h_norm_sq(X: np.ndarray, chi: np.ndarray) -> float:
    """Squared energy norm |X|^2 + 0.5 * int |chi|^2 on a uniform grid."""
    chi = np.asarray(chi, dtype=float)
    dx = 1.0 / (chi.shape[0] - 1)
    return float(np.dot(X, X) + 0.5 * simpson((chi ** 2).sum(axis=1), dx))


def lyapunov_value(cert: Certificate, N: int, state, plant: PlantParams) -> float:
    """Evaluate the certified Lyapunov functional on a sampled state.

    `state` is (X, chi) with X the extended ODE vector and chi the (n, 2)
    characteristic samples on a uniform grid.
    """
    X, chi = state
    X = np.asarray(X, dtype=float)
    chi = np.asarray(chi, dtype=float)
    p = 2 * (N + 1)
    m = cert.vars.P.shape[0] - p
    if X.shape != (m,):
        raise InputError(f"state X has shape {X.shape}, certificate wants ({m},)")
    if chi.ndim != 2 or chi.shape[1] != 2:
        raise InputError(f"chi must be (n, 2) samples, got {chi.shape}")
    stack = project_stack(chi, N)
    xn = np.concatenate([X, stack])
    quad = float(xn @ cert.vars.P @ xn)
    n = chi.shape[0]
    dx = 1.0 / (n - 1)
    x = np.linspace(0.0, 1.0, n)
    S, R = cert.vars.S, cert.vars.R
    weight = np.exp(2.0 * cert.alpha * x / plant.c)
    dens = weight * (np.einsum("ni,ij,nj->n", chi, S, chi)
                     + x * np.einsum("ni,ij,nj->n", chi, R, chi))
    return quad + float(simpson(dens, dx))


def lyapunov_bounds(cert: Certificate, plant: PlantParams) -> tuple[float, float]:
    """Constants (eps1, eps2) sandwiching the functional between energy norms."""
    lam_P = np.linalg.eigvalsh(cert.vars.P)
    lam_S = np.linalg.eigvalsh(cert.vars.S).min()
    lam_SR = np.linalg.eigvalsh(cert.vars.S + cert.vars.R).max()
    eps1 = min(lam_P.min(), 2.0 * lam_S)
    eps2 = max(4.0 * lam_P.max(),
               4.0 * math.exp(2.0 * cert.alpha / plant.c) * lam_SR)
    return float(eps1), float(eps2)
