import numpy as np
import pytest

from pipestab.errors import InputError
from pipestab.lmi import DecisionVars, assemble
from pipestab.model import alpha_max, build_closed_loop
from pipestab.sdp import (FAILURE, FEASIBLE, INFEASIBLE, Certificate,
                          SolveOptions, certificate_margin, export_instance,
                          solve_feasibility, verify_certificate)


@pytest.fixture(scope="module")
def ff_problem(plant, ff):
    return assemble(1, build_closed_loop(plant, ff), plant)


class TestSolve:
    def test_feasible_below_supremum(self, ff_problem):
        report = solve_feasibility(ff_problem, 0.20)
        assert report.status == FEASIBLE
        assert report.certificate.margin > 1e-7

    def test_infeasible_above_supremum(self, ff_problem):
        report = solve_feasibility(ff_problem, 0.30)
        assert report.status == INFEASIBLE
        assert report.certificate is None

    def test_infeasible_beyond_reflection_bound(self, plant, ff_problem):
        report = solve_feasibility(ff_problem, alpha_max(plant) + 0.1)
        assert report.status == INFEASIBLE

    def test_rejects_bad_alpha(self, ff_problem):
        with pytest.raises(InputError):
            solve_feasibility(ff_problem, -0.1)
        with pytest.raises(InputError):
            solve_feasibility(ff_problem, float("inf"))

    def test_unknown_solver_rejected(self, ff_problem):
        with pytest.raises(InputError):
            solve_feasibility(ff_problem, 0.1, SolveOptions(solver="NOPE"))

    def test_trace_normalization(self, ff_problem):
        report = solve_feasibility(ff_problem, 0.15)
        assert report.certificate.vars.trace_sum == pytest.approx(1.0, abs=1e-9)

    def test_large_gain_controller_is_conditioned(self, plant, stabilized_dyn):
        # boundary gains near 1e3 stress the solver scaling; the congruence
        # preconditioner must keep the verdict clean and the margins verified
        pb = assemble(0, build_closed_loop(plant, stabilized_dyn), plant)
        report = solve_feasibility(pb, 0.5)
        assert report.status == FEASIBLE
        assert verify_certificate(pb, report.certificate,
                                  report.certificate.margin / 2.0)

    def test_printed_dynamic_preset_not_certifiable(self, plant, dyn):
        # the bundled dynamic preset destabilizes the plant; no rate is
        # certifiable, including zero
        pb = assemble(0, build_closed_loop(plant, dyn), plant)
        assert solve_feasibility(pb, 0.0).status == INFEASIBLE


class TestGeneralPlants:
    def test_random_damped_plants_certify_and_respect_bound(self, ff):
        # generality beyond the benchmark constants: damped boundaries and a
        # Hurwitz axial block must certify stability and some positive rate,
        # and nothing above the reflection bound may be declared feasible
        from pipestab.model import PlantParams, alpha_max, build_closed_loop
        rng = np.random.default_rng(0)
        for _ in range(8):
            p = PlantParams(
                c=float(rng.uniform(0.8, 4.0)), k=float(rng.uniform(0.02, 1.5)),
                g=float(rng.uniform(0.02, 3.0)), q=float(rng.uniform(0, 0.005)),
                Te=float(rng.uniform(0, 8000)), Omega_e=float(rng.uniform(1, 15)),
                A21=float(rng.uniform(-60, -2)), A22=float(rng.uniform(-3, -0.2)),
                b=float(rng.uniform(-2, -0.1)), e1=float(rng.uniform(-10, 10)),
                e2=float(rng.uniform(-1, 1)))
            pb = assemble(1, build_closed_loop(p, ff), p)
            ode = abs(np.linalg.eigvals(p.A).real.max())
            target = 0.5 * min(alpha_max(p), ode)
            assert solve_feasibility(pb, 0.0).status == FEASIBLE
            assert solve_feasibility(pb, target).status == FEASIBLE
            assert solve_feasibility(pb, 1.05 * alpha_max(p)).status == INFEASIBLE

    def test_feasibility_monotone_in_rate(self, ff_problem):
        assert solve_feasibility(ff_problem, 0.20).status == FEASIBLE
        for alpha in (0.10, 0.05, 0.01):
            assert solve_feasibility(ff_problem, alpha).status == FEASIBLE


class TestVerify:
    def test_solver_output_verifies(self, ff_problem):
        report = solve_feasibility(ff_problem, 0.18)
        cert = report.certificate
        assert verify_certificate(ff_problem, cert, cert.margin / 2.0)

    def test_scaled_certificate_still_verifies(self, ff_problem):
        # homogeneity: positive rescaling preserves strict feasibility
        report = solve_feasibility(ff_problem, 0.18)
        cert = report.certificate
        scaled = Certificate(vars=cert.vars.scaled(7.5), alpha=cert.alpha,
                             margin=7.5 * cert.margin)
        assert verify_certificate(ff_problem, scaled, scaled.margin / 2.0)
        assert certificate_margin(ff_problem, scaled.vars, cert.alpha) == \
            pytest.approx(7.5 * cert.margin, rel=1e-9)

    def test_corrupted_certificate_rejected(self, ff_problem):
        report = solve_feasibility(ff_problem, 0.18)
        cert = report.certificate
        bad = Certificate(
            vars=DecisionVars(cert.vars.P, cert.vars.R, -cert.vars.S),
            alpha=cert.alpha, margin=cert.margin)
        assert not verify_certificate(ff_problem, bad, cert.margin / 2.0)

    def test_hand_built_vars_fail_beyond_bound(self, plant, ff_problem):
        # identity-based vars cannot beat the reflection bound: the tail
        # block of the inequality acquires a positive eigenvalue
        s = ff_problem.m + ff_problem.p
        total = s + 4.0
        vars = DecisionVars(np.eye(s) / total, np.eye(2) / total, np.eye(2) / total)
        cert = Certificate(vars=vars, alpha=alpha_max(plant) + 0.3, margin=1e-9)
        assert not verify_certificate(ff_problem, cert, 1e-12)

    def test_dimension_mismatch(self, plant, dyn, ff_problem):
        other = assemble(1, build_closed_loop(plant, dyn), plant)
        report = solve_feasibility(other, 0.05)
        assert report.status in (FEASIBLE, INFEASIBLE, FAILURE)
        rep_ff = solve_feasibility(ff_problem, 0.05)
        with pytest.raises(InputError):
            verify_certificate(other, rep_ff.certificate, 1e-9)


class TestExport:
    def test_instance_file_contains_certificate(self, ff_problem, tmp_path):
        report = solve_feasibility(ff_problem, 0.1)
        path = tmp_path / "instance.txt"
        export_instance(ff_problem, report.certificate, path)
        text = path.read_text()
        assert "matrix P" in text
        assert "scalar alpha" in text
        assert "matrix dynamics" in text
