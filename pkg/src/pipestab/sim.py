"""Explicit finite-difference simulation of the closed loop, order 2.

Interior nodes advance by leapfrog; the two velocity-feedback boundary
conditions close through ghost points with centered differences in time, and
the ODE/controller block advances by the trapezoidal rule using boundary
velocities sampled at second order.  The first step is a Taylor start.
"""

from __future__ import annotations

import csv
import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConfigError, DivergenceError, InputError, ParameterError
from .model import (ControllerParams, PlantParams, build_closed_loop,
                    equilibrium_slope, feedforward_controls)
from .quadrature import simpson_weights

IC_CHOICES = ("ramp", "equilibrium", "perturbed")


@dataclass(frozen=True)
class SimConfig:
    """Grid, horizon and initial-condition selection.

    M spatial intervals (M even so the M+1 grid points suit Simpson); the time
    step is dt_factor/(c*M), i.e. dt_factor is the CFL number and must stay
    <= 1 for leapfrog stability.
    """

    M: int = 200
    dt_factor: float = 0.9
    T: float = 25.0
    stride: int = 10
    ic: str = "ramp"
    seed: int = 0
    perturbation: float = 1.0

    def __post_init__(self):
        if self.M < 4 or self.M % 2 != 0:
            raise ConfigError(f"M must be even and >= 4, got {self.M}")
        if not 0.0 < self.dt_factor <= 1.0:
            raise ConfigError(f"CFL number must lie in (0, 1], got {self.dt_factor}")
        if self.T <= 0:
            raise ConfigError(f"horizon must be positive, got {self.T}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.ic not in IC_CHOICES:
            raise ConfigError(f"ic must be one of {IC_CHOICES}, got {self.ic!r})")


@dataclass(frozen=True)
class SimTrace:
    """Strided time series of a closed-loop run (grids plus scalar series)."""

    t: np.ndarray
    x: np.ndarray
    w: np.ndarray            # (K, M+1) twist snapshots
    wt: np.ndarray           # (K, M+1) angular velocity snapshots
    wt0: np.ndarray
    wt1: np.ndarray
    Y: np.ndarray            # (K, 2)
    Xc: np.ndarray           # (K, n)
    u1: np.ndarray
    u2: np.ndarray
    energy: np.ndarray
    dt: float
    ic_residuals: dict = field(default_factory=dict)


def initial_profiles(plant: PlantParams, ctrl: ControllerParams,
                     cfg: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Initial twist w(x,0) and velocity w_t(x,0) on the grid."""
    x = np.linspace(0.0, 1.0, cfg.M + 1)
    sigma1 = equilibrium_slope(plant)
    if cfg.ic == "equilibrium":
        return sigma1 * x, np.full(cfg.M + 1, plant.Omega_e)
    if cfg.ic == "ramp":
        if plant.k == 0 or plant.g == 0:
            raise ParameterError("ramp initial condition needs k != 0 and g != 0")
        u1e, _ = feedforward_controls(plant)
        w0 = 2.0 - plant.Omega_e * x
        v0 = ((plant.Omega_e - plant.q * plant.Te) / plant.k) * x \
            - ((u1e - plant.Omega_e) / plant.g) * (1.0 - x)
        return w0, v0
    # perturbed: equilibrium plus smooth modes whose slope and velocity vanish
    # at both ends, so the boundary conditions hold exactly at t = 0
    rng = np.random.default_rng(cfg.seed)
    w0 = sigma1 * x
    v0 = np.full(cfg.M + 1, plant.Omega_e)
    env = np.sin(np.pi * x)
    for mode in range(1, 5):
        aw, av = rng.normal(scale=cfg.perturbation / mode, size=2)
        w0 = w0 + aw * np.sin(mode * np.pi * x) * env
        v0 = v0 + av * np.sin(mode * np.pi * x) * env
    return w0, v0


def _boundary_residuals(plant, w0, v0, u1_full, dx):
    """Robin-condition residuals of the initial data (one-sided slopes)."""
    wx0 = (-3.0 * w0[0] + 4.0 * w0[1] - w0[2]) / (2.0 * dx)
    wx1 = (3.0 * w0[-1] - 4.0 * w0[-2] + w0[-3]) / (2.0 * dx)
    return {
        "table": float(wx0 - plant.g * (v0[0] - u1_full)),
        "bit": float(wx1 + plant.k * v0[-1] + plant.q * plant.Te),
    }


def simulate(plant: PlantParams, ctrl: ControllerParams, cfg: SimConfig) -> SimTrace:
    """Run the closed loop and return the strided trace."""
    cl = build_closed_loop(plant, ctrl)
    n, m = ctrl.n, cl.m
    M = cfg.M
    dx = 1.0 / M
    dt = cfg.dt_factor / (plant.c * M)
    lam = plant.c * dt / dx              # = dt_factor (CFL number)
    if lam > 1.0 + 1e-12:
        raise ConfigError(f"CFL number {lam:.3f} exceeds 1")
    steps = int(round(cfg.T / dt))
    if steps < 2:
        raise ConfigError("horizon shorter than two time steps")
    x = np.linspace(0.0, 1.0, M + 1)
    u1e, u2e = feedforward_controls(plant)
    Om = plant.Omega_e
    qTe = plant.q * plant.Te

    w0, v0 = initial_profiles(plant, ctrl, cfg)
    V = np.zeros(m)
    C1 = cl.C1[0]
    resid = _boundary_residuals(plant, w0, v0, u1e + C1 @ V, dx)

    W = np.empty((steps + 1, M + 1))
    Vh = np.empty((steps + 1, m))
    W[0], Vh[0] = w0, V

    eye = np.eye(m)
    lu = lu_factor(eye - 0.5 * dt * cl.A)
    a_plus = eye + 0.5 * dt * cl.A
    B = cl.B
    if n > 0:
        # the field/controller coupling is explicit; blow-ups observed once
        # dt*|eig(Ac)| passes ~0.65
        stiffness = dt * float(np.abs(np.linalg.eigvals(ctrl.Ac)).max())
        if stiffness > 0.5:
            warnings.warn(
                f"controller poles under-resolved (dt*|eig(Ac)|max = {stiffness:.2f}); "
                "the explicit field/controller coupling may go unstable -- "
                "reduce dt_factor or refine M", RuntimeWarning)

    # Taylor start: ghost points close the boundary conditions at t = 0
    u1_0 = u1e + C1 @ V
    ghost_l = w0[1] - 2.0 * dx * plant.g * (v0[0] - u1_0)
    ghost_r = w0[M - 1] + 2.0 * dx * (-plant.k * v0[M] - qTe)
    wxx = np.empty(M + 1)
    wxx[1:M] = (w0[2:] - 2.0 * w0[1:M] + w0[:M - 1]) / dx ** 2
    wxx[0] = (w0[1] - 2.0 * w0[0] + ghost_l) / dx ** 2
    wxx[M] = (ghost_r - 2.0 * w0[M] + w0[M - 1]) / dx ** 2
    W[1] = w0 + dt * v0 + 0.5 * (plant.c * dt) ** 2 * wxx
    f0 = B @ np.array([v0[M] - Om, v0[0] - Om])
    vt1 = v0 + dt * plant.c ** 2 * wxx
    f1 = B @ np.array([vt1[M] - Om, vt1[0] - Om])
    rhs = a_plus @ V + 0.5 * dt * (f0 + f1)
    if not (np.isfinite(rhs).all() and np.isfinite(W[1]).all()):
        raise DivergenceError(1)
    V = lu_solve(lu, rhs, check_finite=False)
    Vh[1] = V

    cg = plant.c * lam * plant.g
    ck = plant.c * lam * plant.k
    w_prev, w_cur = W[0], W[1]
    for j in range(1, steps):
        u1j = u1e + C1 @ V
        w_next = np.empty(M + 1)
        w_next[1:M] = (2.0 * w_cur[1:M] - w_prev[1:M]
                       + lam ** 2 * (w_cur[2:] - 2.0 * w_cur[1:M] + w_cur[:M - 1]))
        w_next[0] = (2.0 * w_cur[0] - (1.0 - cg) * w_prev[0]
                     + 2.0 * lam ** 2 * (w_cur[1] - w_cur[0])
                     + 2.0 * cg * dt * u1j) / (1.0 + cg)
        w_next[M] = (2.0 * w_cur[M] - (1.0 - ck) * w_prev[M]
                     + 2.0 * lam ** 2 * (w_cur[M - 1] - w_cur[M])
                     - 2.0 * plant.c * lam * dt * qTe) / (1.0 + ck)
        wt_now = np.array([(w_next[M] - w_prev[M]), (w_next[0] - w_prev[0])]) / (2.0 * dt)
        wt_nxt = np.array([(3.0 * w_next[M] - 4.0 * w_cur[M] + w_prev[M]),
                           (3.0 * w_next[0] - 4.0 * w_cur[0] + w_prev[0])]) / (2.0 * dt)
        rhs = a_plus @ V + 0.5 * dt * ((wt_now - Om) @ B.T + (wt_nxt - Om) @ B.T)
        if not (np.isfinite(rhs).all() and np.isfinite(w_next[0]) and np.isfinite(w_next[M])):
            raise DivergenceError(j + 1)
        V = lu_solve(lu, rhs, check_finite=False)
        W[j + 1] = w_next
        Vh[j + 1] = V
        w_prev, w_cur = W[j], W[j + 1]
    if not (np.isfinite(W).all() and np.isfinite(Vh).all()):
        bad = int(np.argmax(~np.isfinite(W).all(axis=1)))
        raise DivergenceError(bad)

    keep = np.arange(0, steps + 1, cfg.stride)
    t_full = np.arange(steps + 1) * dt
    wt_full = np.gradient(W, dt, axis=0, edge_order=2)
    wt_full[0] = v0                       # exact initial velocity
    wx = np.gradient(W[keep], dx, axis=1, edge_order=2)
    weights = simpson_weights(M + 1, dx)
    sigma1 = equilibrium_slope(plant)
    energy_series = ((np.abs(Vh[keep]) ** 2).sum(axis=1)
                     + (wt_full[keep] - Om) ** 2 @ weights
                     + plant.c ** 2 * ((wx - sigma1) ** 2 @ weights))
    u1_series = u1e + Vh[keep] @ C1
    u2_series = u2e + Vh[keep, :n] @ ctrl.C2[0] + Vh[keep, n:] @ ctrl.K[0]
    return SimTrace(
        t=t_full[keep], x=x, w=W[keep], wt=wt_full[keep],
        wt0=wt_full[keep, 0], wt1=wt_full[keep, M],
        Y=Vh[keep, n:], Xc=Vh[keep, :n],
        u1=u1_series, u2=u2_series, energy=energy_series,
        dt=dt, ic_residuals=resid)


def energy(plant: PlantParams, state) -> float:
    """Energy-norm squared of one sampled state (X, wt grid, wx grid)."""
    X, wt, wx = state
    wt = np.asarray(wt, dtype=float)
    wx = np.asarray(wx, dtype=float)
    if wt.shape != wx.shape:
        raise InputError(f"wt and wx grids differ: {wt.shape} vs {wx.shape}")
    weights = simpson_weights(wt.shape[0], 1.0 / (wt.shape[0] - 1))
    sigma1 = equilibrium_slope(plant)
    return float(np.dot(X, X)
                 + (wt - plant.Omega_e) ** 2 @ weights
                 + plant.c ** 2 * (wx - sigma1) ** 2 @ weights)


def fit_decay(trace: SimTrace, window: tuple[float, float]) -> tuple[float, float]:
    """Least-squares decay rate of log energy over a time window.

    Returns (alpha_emp, r2); the energy is the squared norm, so the rate is
    minus half the fitted slope.
    """
    t0, t1 = window
    mask = (trace.t >= t0) & (trace.t <= t1)
    if mask.sum() < 2:
        raise InputError(f"window [{t0}, {t1}] selects fewer than 2 samples")
    E = trace.energy[mask]
    if np.any(E <= 0):
        raise InputError("nonpositive energy inside the fit window")
    t = trace.t[mask]
    logE = np.log(E)
    slope, icpt = np.polyfit(t, logE, 1)
    res = logE - (slope * t + icpt)
    ss_tot = float(((logE - logE.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - float((res ** 2).sum()) / ss_tot
    return float(-0.5 * slope), r2


def _atomic_open(path):
    d = os.path.dirname(os.path.abspath(path)) or "."
    return tempfile.NamedTemporaryFile("w", dir=d, delete=False, newline="")


def export_csv(trace: SimTrace, path, snapshots_path=None) -> None:
    """Write the scalar series as CSV; optionally the full field snapshots.

    Values carry 17 significant digits so a round-trip through the file
    reproduces them bit-exactly.
    """
    n = trace.Xc.shape[1]
    header = (["t", "wt0", "wt1", "Y1", "Y2"]
              + [f"Xc{i + 1}" for i in range(n)] + ["u1", "u2", "energy"])
    tmp = _atomic_open(path)
    try:
        writer = csv.writer(tmp)
        writer.writerow(header)
        for i in range(trace.t.shape[0]):
            row = ([trace.t[i], trace.wt0[i], trace.wt1[i],
                    trace.Y[i, 0], trace.Y[i, 1]]
                   + list(trace.Xc[i]) + [trace.u1[i], trace.u2[i], trace.energy[i]])
            writer.writerow([f"{v:.17g}" for v in row])
        tmp.close()
        os.replace(tmp.name, path)
    except OSError as exc:
        os.unlink(tmp.name)
        raise InputError(f"could not write {path}: {exc}") from exc
    if snapshots_path is None:
        return
    tmp = _atomic_open(snapshots_path)
    try:
        writer = csv.writer(tmp)
        writer.writerow(["x", "t", "w", "wt"])
        for i, ti in enumerate(trace.t):
            for j, xj in enumerate(trace.x):
                writer.writerow([f"{v:.17g}" for v in
                                 (xj, ti, trace.w[i, j], trace.wt[i, j])])
        tmp.close()
        os.replace(tmp.name, snapshots_path)
    except OSError as exc:
        os.unlink(tmp.name)
        raise InputError(f"could not write {snapshots_path}: {exc}") from exc


def fixed_end_error(c: float, M: int, dt_factor: float = 0.9, T: float = 1.0) -> float:
    """Max error of the leapfrog core against an exact standing wave.

    Fixed ends, initial profile sin(pi x) at rest; the exact solution is
    sin(pi x) cos(pi c t).  Used to confirm second-order convergence.
    """
    dx = 1.0 / M
    dt = dt_factor / (c * M)
    lam2 = dt_factor ** 2
    steps = int(round(T / dt))
    x = np.linspace(0.0, 1.0, M + 1)
    u_prev = np.sin(np.pi * x)
    u_cur = np.empty_like(u_prev)
    u_cur[1:M] = u_prev[1:M] + 0.5 * lam2 * (u_prev[2:] - 2 * u_prev[1:M] + u_prev[:M - 1])
    u_cur[0] = u_cur[M] = 0.0
    for _ in range(1, steps):
        u_next = np.empty_like(u_prev)
        u_next[1:M] = (2 * u_cur[1:M] - u_prev[1:M]
                       + lam2 * (u_cur[2:] - 2 * u_cur[1:M] + u_cur[:M - 1]))
        u_next[0] = u_next[M] = 0.0
        u_prev, u_cur = u_cur, u_next
    exact = np.sin(np.pi * x) * np.cos(np.pi * c * steps * dt)
    return float(np.abs(u_cur - exact).max())
