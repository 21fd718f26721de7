import dataclasses

import numpy as np
import pytest

from pipestab.analysis import (CERTIFIED, NO_CERTIFICATE, format_table,
                               h_norm_sq, hierarchy_table, lyapunov_bounds,
                               lyapunov_value, max_decay_rate,
                               necessary_condition, table_to_csv)
from pipestab.errors import InputError
from pipestab.lmi import assemble
from pipestab.model import alpha_max, build_closed_loop, riemann_error_fields
from pipestab.sdp import verify_certificate
from pipestab.validate import random_field


@pytest.fixture(scope="module")
def ff_result(plant, ff):
    return max_decay_rate(plant, ff, 1, 1e-3)


class TestNecessaryCondition:
    def test_inside_bound(self, plant, ff):
        assert necessary_condition(plant, ff, 1.0)

    def test_outside_bound(self, plant, ff):
        assert not necessary_condition(plant, ff, 1.3)

    def test_impedance_matched_always_true(self, plant, ff):
        matched = dataclasses.replace(plant, k=1.0 / plant.c)
        assert necessary_condition(matched, ff, 1e6)


class TestMaxDecayRate:
    def test_certified_result(self, plant, ff_result):
        r = ff_result
        assert r.status == CERTIFIED
        assert r.alpha_N == r.bracket[0]
        assert r.bracket[1] - r.bracket[0] <= 1e-3
        assert r.alpha_N <= alpha_max(plant)
        # benchmark band for the order-1 certified rate
        assert r.alpha_N == pytest.approx(0.2159, abs=5e-3)

    def test_certificate_at_lo_verifies(self, plant, ff, ff_result):
        problem = assemble(1, build_closed_loop(plant, ff), plant)
        cert = ff_result.certificate
        assert cert.alpha == ff_result.alpha_N
        assert verify_certificate(problem, cert, cert.margin / 2.0)

    def test_no_certificate_outcome(self, plant, dyn):
        r = max_decay_rate(plant, dyn, 0, 1e-3)
        assert r.status == NO_CERTIFICATE
        assert r.alpha_N is None
        assert r.certificate is None

    def test_user_cap_brackets(self, plant, ff):
        r = max_decay_rate(plant, ff, 0, 1e-3, cap=0.05)
        assert r.status == CERTIFIED
        # supremum is above the cap, so bracketing expands past it
        assert r.alpha_N > 0.05

    def test_degenerate_reflection_bound(self, plant, ff):
        # g = -k gives alpha_max = 0: no rate is certifiable, not even zero
        neutralized = dataclasses.replace(plant, g=-plant.k)
        r = max_decay_rate(neutralized, ff, 0, 1e-3)
        assert r.status == NO_CERTIFICATE

    def test_certified_rates_never_exceed_true_decay(self, plant, ff):
        # soundness against an oracle sharing nothing with the solver: the
        # slowest closed-loop characteristic root bounds every certificate
        from tests.oracles import spectral_abscissa
        truth = -spectral_abscissa(plant, ff)
        for N in range(3):
            r = max_decay_rate(plant, ff, N, 1e-3)
            assert r.status == CERTIFIED
            assert r.alpha_N <= truth + 1e-3

    def test_bad_tolerance(self, plant, ff):
        with pytest.raises(InputError):
            max_decay_rate(plant, ff, 0, 0.0)


class TestHierarchyTable:
    def test_rows_and_monotonicity(self, plant, ff, dyn):
        table = hierarchy_table(plant, [("feedforward", ff), ("dynamic", dyn)],
                                N_max=1, tol=1e-3)
        assert table.labels == ("feedforward", "dynamic")
        ff_row = table.row("feedforward")
        assert all(r.status == CERTIFIED for r in ff_row)
        assert table.row_monotone("feedforward")
        assert all(r.status == NO_CERTIFICATE for r in table.row("dynamic"))

    def test_emitters(self, plant, ff, tmp_path):
        table = hierarchy_table(plant, [("feedforward", ff)], N_max=1, tol=1e-2)
        text = format_table(table)
        assert "feedforward" in text and "alpha_max" in text
        path = tmp_path / "table.csv"
        table_to_csv(table, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "controller,N,alpha_N,alpha_max,margin,iterations"
        assert len(lines) == 3

    def test_order_cap(self, plant, ff):
        with pytest.raises(InputError):
            hierarchy_table(plant, [("feedforward", ff)], N_max=9, tol=1e-2)


class TestLyapunovValue:
    def test_zero_state(self, plant, ff_result):
        chi = np.zeros((41, 2))
        X = np.zeros(2)
        assert lyapunov_value(ff_result.certificate, 1, (X, chi), plant) == 0.0

    def test_state_only_term(self, plant, ff_result):
        cert = ff_result.certificate
        X = np.array([0.3, -1.1])
        chi = np.zeros((41, 2))
        got = lyapunov_value(cert, 1, (X, chi), plant)
        xn = np.concatenate([X, np.zeros(4)])
        assert got == pytest.approx(float(xn @ cert.vars.P @ xn), rel=1e-12)

    def test_sandwich_between_energy_norms(self, plant, ff_result):
        cert = ff_result.certificate
        eps1, eps2 = lyapunov_bounds(cert, plant)
        assert 0 < eps1 <= eps2
        rng = np.random.default_rng(7)
        for _ in range(25):
            chi = random_field(rng, 201)
            X = rng.normal(size=2)
            v = lyapunov_value(cert, 1, (X, chi), plant)
            h = h_norm_sq(X, chi)
            assert eps1 * h <= v * (1 + 1e-9) + 1e-12
            assert v <= eps2 * h * (1 + 1e-9) + 1e-12

    def test_grid_mismatch(self, plant, ff_result):
        with pytest.raises(InputError):
            lyapunov_value(ff_result.certificate, 1, (np.zeros(3), np.zeros((41, 2))),
                           plant)


class TestEnergyIdentity:
    def test_h_norm_matches_field_form(self, plant):
        # |X|^2 + 0.5 ||chi||^2 equals |X|^2 + ||wt - Om||^2 + c^2 ||wx - s1||^2
        from pipestab.model import equilibrium_slope
        from pipestab.quadrature import simpson
        rng = np.random.default_rng(11)
        x = np.linspace(0, 1, 201)
        wt = plant.Omega_e + np.sin(2.3 * x) + 0.2 * rng.normal()
        wx = equilibrium_slope(plant) + np.cos(1.7 * x)
        X = rng.normal(size=2)
        chi = riemann_error_fields(plant, wt, wx)
        direct = float(X @ X + simpson((wt - plant.Omega_e) ** 2, 1 / 200)
                       + plant.c ** 2 * simpson(
                           (wx - equilibrium_slope(plant)) ** 2, 1 / 200))
        assert h_norm_sq(X, chi) == pytest.approx(direct, abs=1e-10)
