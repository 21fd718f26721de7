"""Self-contained invariant checks, runnable from the command line.

Each check pits two independent computation routes against each other
(quadrature vs projection sums, finite differences vs structural matrices,
numerical scheme vs exact solution, solver output vs eigenvalue tests).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .legendre import bessel_gap, build_structural, eval_legendre, project_stack
from .lmi import DecisionVars, assemble
from .model import build_closed_loop, feedforward_controller, reference_plant
from .sdp import FEASIBLE, Certificate, solve_feasibility, verify_certificate
from .sim import SimConfig, fixed_end_error, simulate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_field(rng: np.random.Generator, n: int) -> np.ndarray:
    """Smooth random 2-vector field: low-order polynomial plus sinusoids."""
    x = np.linspace(0.0, 1.0, n)
    out = np.zeros((n, 2))
    for comp in range(2):
        poly = np.polynomial.polynomial.polyval(x, rng.normal(size=4))
        freq = rng.uniform(0.5, 3.0, size=2)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        amp = rng.normal(size=2)
        out[:, comp] = poly + amp[0] * np.sin(2 * np.pi * freq[0] * x + phase[0]) \
            + amp[1] * np.cos(2 * np.pi * freq[1] * x + phase[1])
    return out


def random_spd(rng: np.random.Generator) -> np.ndarray:
    A = rng.normal(size=(2, 2))
    return A @ A.T + 0.1 * np.eye(2)


def check_bessel(seed: int = 0, cases: int = 100) -> CheckResult:
    """Projection bound nonnegative and tightening as the order grows."""
    rng = np.random.default_rng(seed)
    n = 401
    worst = np.inf
    for _ in range(cases):
        chi = random_field(rng, n)
        R = random_spd(rng)
        gaps = [bessel_gap(chi, R, N) for N in range(5)]
        worst = min(worst, min(gaps))
        if min(gaps) < -1e-9:
            return CheckResult("bessel", False, f"gap {min(gaps):.2e} < -1e-9")
        if any(b > a + 1e-12 for a, b in zip(gaps, gaps[1:])):
            return CheckResult("bessel", False, "gap increased with the order")
    return CheckResult("bessel", True, f"{cases} cases, min gap {worst:.2e}")


def check_bessel_exact_span(seed: int = 1, cases: int = 20) -> CheckResult:
    """Fields spanned by the first N+1 polynomials give (numerically) zero gap."""
    rng = np.random.default_rng(seed)
    n = 1601
    x = np.linspace(0.0, 1.0, n)
    worst = 0.0
    for _ in range(cases):
        N = int(rng.integers(0, 5))
        chi = np.zeros((n, 2))
        for ell in range(N + 1):
            chi += rng.normal(size=2)[None, :] * eval_legendre(ell, x)[:, None]
        gap = bessel_gap(chi, random_spd(rng), N)
        worst = max(worst, abs(gap))
    ok = worst <= 1e-9
    return CheckResult("bessel-exact-span", ok, f"max |gap| {worst:.2e}")


def transport_residual(N: int, M: int, dt: float, speed: float = 2.0,
                       t: float = 0.37) -> float:
    """Residual of the projection-stack derivative identity on a transported field.

    The field chi(x, t) = phi(x + c t) solves the transport equation exactly;
    the centered finite-difference derivative of its projection stack is
    compared with c*ones*chi(1) - c*alt_ones*chi(0) - c*L*stack.
    """
    def phi(y):
        return np.stack([np.sin(1.3 * y) + 0.5 * np.cos(2.1 * y + 0.4),
                         np.cos(0.7 * y) - 0.3 * np.sin(3.1 * y)], axis=1)

    x = np.linspace(0.0, 1.0, M + 1)
    L, ones, alt = build_structural(N)

    def stack_at(tau):
        return project_stack(phi(x + speed * tau), N)

    dstack = (stack_at(t + dt) - stack_at(t - dt)) / (2.0 * dt)
    chi = phi(x + speed * t)
    rhs = speed * ones @ chi[-1] - speed * alt @ chi[0] - speed * L @ stack_at(t)
    return float(np.abs(dstack - rhs).max())


def check_transport_identity() -> CheckResult:
    """Residual is O(dt + dx^2): halving both must shrink it by >= 2.5x."""
    r1 = transport_residual(N=3, M=100, dt=2e-3)
    r2 = transport_residual(N=3, M=200, dt=1e-3)
    ratio = r1 / r2 if r2 > 0 else np.inf
    return CheckResult("transport-identity", ratio >= 2.5,
                       f"residuals {r1:.2e} -> {r2:.2e}, ratio {ratio:.2f}")


def check_scheme_order() -> CheckResult:
    """Wave scheme error vs exact standing wave drops >= 3.5x per halving."""
    plant = reference_plant()
    e1 = fixed_end_error(plant.c, 100)
    e2 = fixed_end_error(plant.c, 200)
    ratio = e1 / e2 if e2 > 0 else np.inf
    return CheckResult("scheme-order", ratio >= 3.5,
                       f"errors {e1:.2e} -> {e2:.2e}, ratio {ratio:.2f}")


def check_certificates() -> CheckResult:
    """Feasible verdicts verify by eigenvalues; corrupted ones are rejected."""
    plant = reference_plant()
    problem = assemble(1, build_closed_loop(plant, feedforward_controller()), plant)
    report = solve_feasibility(problem, 0.15)
    if report.status != FEASIBLE:
        return CheckResult("certificates", False, f"expected feasible, got {report.status}")
    cert = report.certificate
    if not verify_certificate(problem, cert, cert.margin / 2.0):
        return CheckResult("certificates", False, "verification rejected a feasible verdict")
    bad = Certificate(vars=DecisionVars(cert.vars.P, cert.vars.R, -cert.vars.S),
                      alpha=cert.alpha, margin=cert.margin)
    if verify_certificate(problem, bad, cert.margin / 2.0):
        return CheckResult("certificates", False, "corrupted certificate was accepted")
    return CheckResult("certificates", True, f"margin {cert.margin:.2e}")


def check_equilibrium() -> CheckResult:
    """The operating point is a fixed point of the scheme to rounding."""
    plant = reference_plant()
    cfg = SimConfig(M=100, T=5.0, ic="equilibrium", stride=5)
    trace = simulate(plant, feedforward_controller(), cfg)
    resid = float(np.abs(trace.wt - plant.Omega_e).max())
    return CheckResult("equilibrium-fixed-point", resid <= 1e-8, f"residual {resid:.2e}")


ALL_CHECKS = (check_bessel, check_bessel_exact_span, check_transport_identity,
              check_scheme_order, check_certificates, check_equilibrium)


def run_all(seed: int = 0) -> list[CheckResult]:
    results = []
    for fn in ALL_CHECKS:
        if fn is check_bessel:
            results.append(fn(seed=seed))
        else:
            results.append(fn())
    return results
