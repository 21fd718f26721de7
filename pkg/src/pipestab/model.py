"""Plant and controller parameters, closed-loop matrices and equilibrium quantities.

The plant is a torsional wave on a pipe of unit scaled length (rotary table at
x=0, bit at x=1), coupled to a two-state axial ODE driven by the bit speed.
A strictly proper dynamic controller of order n may close the loop through the
boundary velocities; the feedforward-only case is n = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

#: Sentinel for an unbounded decay-rate cap (no neutral part).
INF_RATE = math.inf


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the wave + bit-dynamics model.

    c: wave speed (m/s); k: bit damping (s/m); g: table damping (s/m);
    q: torque gain (1/(N*m)); Te: operating torque (N*m);
    Omega_e: target angular speed (rad/s); A21 (1/s^2), A22 (1/s): axial ODE
    entries; b: axial input gain (1/s); e1 (m/(s*rad)), e2 (1/(m*kg)):
    coupling gains.
    """

    c: float
    k: float
    g: float
    q: float
    Te: float
    Omega_e: float
    A21: float
    A22: float
    b: float
    e1: float
    e2: float

    def __post_init__(self):
        if self.c <= 0:
            raise ParameterError(f"wave speed must be positive, got c={self.c}")
        if self.Omega_e <= 0:
            raise ParameterError(f"target speed must be positive, got Omega_e={self.Omega_e}")

    @property
    def A(self) -> np.ndarray:
        return _freeze([[0.0, 1.0], [self.A21, self.A22]])

    @property
    def B(self) -> np.ndarray:
        return _freeze([[0.0], [self.b]])

    @property
    def E1(self) -> np.ndarray:
        return _freeze([[0.0], [self.e1]])

    @property
    def E2(self) -> np.ndarray:
        return _freeze([[0.0], [self.e2]])

    @property
    def is_neutral_free(self) -> bool:
        """True when a boundary damping exactly matches the wave impedance.

        In that case reflections vanish on one side and the decay-rate cap
        `alpha_max` is unbounded.
        """
        return self.c * self.k == 1.0 or self.c * self.g == 1.0


@dataclass(frozen=True)
class ControllerParams:
    """Strictly proper dynamic output controller of order n.

    State update  Xc' = Ac Xc + Bc1 Y + Bc2 [dwt(0); dwt(1)]  and outputs
    u1 = C1 [Xc; Y], u2 = C2 Xc + K Y, all acting on deviations from the
    operating point.  n = 0 with zero gains is the feedforward-only case.
    """

    n: int
    Ac: np.ndarray
    Bc1: np.ndarray
    Bc2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        n = self.n
        if n < 0:
            raise ParameterError(f"controller order must be >= 0, got {n}")
        shapes = {
            "Ac": (n, n), "Bc1": (n, 2), "Bc2": (n, 2),
            "C1": (1, n + 2), "C2": (1, n), "K": (1, 2),
        }
        for name, want in shapes.items():
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if name == "Ac" and n == 0:
                arr = arr.reshape(0, 0)
            if name in ("Bc1", "Bc2") and n == 0:
                arr = arr.reshape(0, 2)
            if name == "C2" and n == 0:
                arr = arr.reshape(1, 0)
            if arr.shape != want:
                raise ParameterError(f"{name} must have shape {want}, got {arr.shape}")
            object.__setattr__(self, name, _freeze(arr))

    @classmethod
    def feedforward(cls) -> "ControllerParams":
        """Order-0 controller: constant feedforward inputs only."""
        z = np.zeros
        return cls(n=0, Ac=z((0, 0)), Bc1=z((0, 2)), Bc2=z((0, 2)),
                   C1=z((1, 2)), C2=z((1, 0)), K=z((1, 2)))


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop matrices for the extended ODE state X = [Xc; Y].

    X' = A X + B [dwt(1); dwt(0)] with dwt the boundary-velocity deviations.
    chi0_gain/chi1_gain map [dwt(1); dwt(0)] to the characteristic variables
    at x = 0 and x = 1; C1 is kept for the boundary-feedback rows.
    """

    m: int
    A: np.ndarray
    B: np.ndarray
    chi0_gain: np.ndarray = field(repr=False)
    chi1_gain: np.ndarray = field(repr=False)
    C1: np.ndarray = field(repr=False)


def build_closed_loop(plant: PlantParams, ctrl: ControllerParams) -> ClosedLoop:
    """Assemble the extended closed-loop ODE and boundary matrices.

    The input matrix B pairs with the tail [dwt(1); dwt(0)]: controller rows
    take Bc2 with its columns swapped (Bc2 is declared against
    [dwt(0); dwt(1)]) and the axial rows take [E1, 0] since E1 multiplies the
    bit velocity dwt(1).
    """
    n = ctrl.n
    m = n + 2
    A = np.block([[ctrl.Ac, ctrl.Bc1],
                  [plant.B @ ctrl.C2, plant.A + plant.B @ ctrl.K]])
    B = np.vstack([ctrl.Bc2[:, ::-1],
                   np.hstack([plant.E1, np.zeros((2, 1))])])
    ck = plant.c * plant.k
    cg = plant.c * plant.g
    G = np.array([[0.0, 1.0 + cg], [1.0 + ck, 0.0]])
    H = np.array([[1.0 - ck, 0.0], [0.0, 1.0 - cg]])
    return ClosedLoop(m=m, A=_freeze(A), B=_freeze(B),
                      chi0_gain=_freeze(G), chi1_gain=_freeze(H), C1=ctrl.C1)


def feedforward_controls(plant: PlantParams) -> tuple[float, float]:
    """Constant inputs (u1e, u2e) placing the operating point at equilibrium."""
    if plant.g == 0:
        raise ParameterError("feedforward controls undefined for g = 0")
    if plant.b == 0:
        raise ParameterError("feedforward controls undefined for b = 0")
    u1e = plant.Omega_e * (1.0 + plant.k / plant.g) + (plant.q / plant.g) * plant.Te
    u2e = (plant.Te * plant.e2 - plant.Omega_e * plant.e1) / plant.b
    return u1e, u2e


def equilibrium_slope(plant: PlantParams) -> float:
    """Constant equilibrium twist gradient sigma1 = -k*Omega_e - q*Te."""
    return -plant.k * plant.Omega_e - plant.q * plant.Te


def alpha_max(plant: PlantParams) -> float:
    """Upper bound on any certifiable decay rate, from boundary reflections.

    Returns INF_RATE when a boundary matches the wave impedance exactly
    (ck = 1 or cg = 1): the system has no neutral part and the bound is void.
    """
    ck = plant.c * plant.k
    cg = plant.c * plant.g
    den = (ck - 1.0) * (cg - 1.0)
    if den == 0.0:
        return INF_RATE
    ratio = abs((ck + 1.0) * (cg + 1.0) / den)
    return max(0.5 * plant.c * math.log(ratio), 0.0)


def riemann_error_fields(plant: PlantParams, wt: np.ndarray, wx: np.ndarray) -> np.ndarray:
    """Characteristic error variables from sampled velocity and slope grids.

    chi1(x) = dwt(x) + c*dwx(x) and chi2(x) = dwt(1-x) - c*dwx(1-x), with
    deviations taken from (Omega_e, sigma1).  Both inputs are sampled on the
    same uniform grid over [0, 1]; the reversal for chi2 is exact there.
    """
    dwt = np.asarray(wt, dtype=float) - plant.Omega_e
    dwx = np.asarray(wx, dtype=float) - equilibrium_slope(plant)
    chi1 = dwt + plant.c * dwx
    chi2 = (dwt - plant.c * dwx)[::-1]
    return np.stack([chi1, chi2], axis=1)


def reference_plant() -> PlantParams:
    """Drill-string benchmark constants used throughout the test suite."""
    return PlantParams(c=2.6892, k=0.1106, g=2.48, q=0.0012, Te=7572.4,
                       Omega_e=10.0, A21=-41.58, A22=-0.43, b=-0.43,
                       e1=-8.35, e2=-0.069)


def feedforward_controller() -> ControllerParams:
    return ControllerParams.feedforward()


def dynamic_controller() -> ControllerParams:
    """Second-order benchmark controller built from two boundary low-pass filters.

    Note: with the reference plant this preset does not actually stabilize the
    closed loop (spectral abscissa ~ +0.42); it is kept verbatim as the
    benchmark definition.  See the stabilizing variant used in the tests for a
    working dynamic design.
    """
    return ControllerParams(
        n=2,
        Ac=np.array([[-800.0, 0.0], [0.0, -150.0]]),
        Bc1=np.zeros((2, 2)),
        Bc2=np.eye(2),
        C1=np.array([[800.0, 0.015, 0.01, -0.1]]),
        C2=np.array([[0.0, -0.0718]]),
        K=np.array([[-82.2, 10.4]]),
    )
