"""Decay-rate certification and simulation for a boundary-damped drill-string model."""

__version__ = "0.1.0"

from .analysis import (DecayResult, HierarchyTable, hierarchy_table,
                       lyapunov_value, max_decay_rate, necessary_condition)
from .legendre import bessel_gap, build_structural, eval_legendre, project
from .lmi import DecisionVars, LmiProblem, assemble, decay_form, lmi_matrix
from .model import (ClosedLoop, ControllerParams, PlantParams, alpha_max,
                    build_closed_loop, dynamic_controller, equilibrium_slope,
                    feedforward_controller, feedforward_controls,
                    reference_plant, riemann_error_fields)
from .sdp import (Certificate, FeasibilityReport, SolveOptions,
                  solve_feasibility, verify_certificate)
from .sim import SimConfig, SimTrace, energy, export_csv, fit_decay, simulate

__all__ = [
    "__version__",
    "PlantParams", "ControllerParams", "ClosedLoop",
    "build_closed_loop", "feedforward_controls", "equilibrium_slope",
    "alpha_max", "riemann_error_fields",
    "reference_plant", "feedforward_controller", "dynamic_controller",
    "eval_legendre", "build_structural", "project", "bessel_gap",
    "LmiProblem", "DecisionVars", "assemble", "decay_form", "lmi_matrix",
    "SolveOptions", "Certificate", "FeasibilityReport",
    "solve_feasibility", "verify_certificate",
    "DecayResult", "HierarchyTable", "max_decay_rate", "necessary_condition",
    "hierarchy_table", "lyapunov_value",
    "SimConfig", "SimTrace", "simulate", "energy", "fit_decay", "export_csv",
]
