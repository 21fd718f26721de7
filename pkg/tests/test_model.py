import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipestab.errors import ParameterError
from pipestab.model import (ControllerParams, PlantParams, alpha_max,
                            build_closed_loop, equilibrium_slope,
                            feedforward_controls, reference_plant,
                            riemann_error_fields)

# frozen by direct evaluation of the defining formulas with the benchmark
# constants (c=2.6892, k=0.1106, g=2.48, q=0.0012, Te=7572.4, Omega_e=10)
U1E = 14.110032258064518
U2E = 1020.92
SIGMA1 = -10.19288
ALPHA_MAX = 1.2310476572300226


def plants(draw):
    c = draw(st.floats(0.5, 5.0))
    return PlantParams(c=c, k=draw(st.floats(0.01, 2.0)), g=draw(st.floats(0.01, 4.0)),
                       q=draw(st.floats(0.0, 0.01)), Te=draw(st.floats(0.0, 1e4)),
                       Omega_e=draw(st.floats(0.1, 20.0)), A21=draw(st.floats(-50, -1)),
                       A22=draw(st.floats(-2, -0.1)), b=draw(st.floats(-2, -0.1)),
                       e1=draw(st.floats(-10, 10)), e2=draw(st.floats(-1, 1)))


class TestPlantParams:
    def test_invariants(self):
        with pytest.raises(ParameterError):
            PlantParams(c=-1, k=0.1, g=1, q=0, Te=0, Omega_e=1,
                        A21=-1, A22=-1, b=-1, e1=0, e2=0)
        with pytest.raises(ParameterError):
            PlantParams(c=1, k=0.1, g=1, q=0, Te=0, Omega_e=0,
                        A21=-1, A22=-1, b=-1, e1=0, e2=0)

    def test_structure_matrices(self, plant):
        assert plant.A.tolist() == [[0.0, 1.0], [-41.58, -0.43]]
        assert plant.B.tolist() == [[0.0], [-0.43]]
        assert plant.E1.tolist() == [[0.0], [-8.35]]
        assert plant.E2.tolist() == [[0.0], [-0.069]]

    def test_neutral_free_flag(self, plant):
        assert not plant.is_neutral_free
        neutral = PlantParams(c=2.0, k=0.5, g=1.0, q=0, Te=0, Omega_e=1,
                              A21=-1, A22=-1, b=-1, e1=0, e2=0)
        assert neutral.is_neutral_free


class TestClosedLoop:
    def test_feedforward_matrices(self, plant, ff):
        cl = build_closed_loop(plant, ff)
        assert cl.m == 2
        np.testing.assert_allclose(cl.A, [[0.0, 1.0], [-41.58, -0.43]])
        np.testing.assert_allclose(cl.B, [[0.0, 0.0], [-8.35, 0.0]])

    def test_boundary_gains(self, plant, ff):
        cl = build_closed_loop(plant, ff)
        np.testing.assert_allclose(
            cl.chi0_gain, [[0.0, 7.669216], [1.29742552, 0.0]], atol=1e-12)
        np.testing.assert_allclose(
            cl.chi1_gain, [[0.70257448, 0.0], [0.0, -5.669216]], atol=1e-12)

    def test_dynamic_dimensions(self, plant, dyn):
        cl = build_closed_loop(plant, dyn)
        assert cl.A.shape == (4, 4)
        assert cl.B.shape == (4, 2)
        # fast filter listens to the table velocity dwt(0), second tail slot
        np.testing.assert_allclose(cl.B[:2], [[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(cl.B[2:], [[0.0, 0.0], [-8.35, 0.0]])

    def test_decoupled_case_is_block_diagonal(self, plant):
        ctrl = ControllerParams(
            n=2, Ac=np.diag([-1.0, -2.0]), Bc1=np.zeros((2, 2)),
            Bc2=np.zeros((2, 2)), C1=np.zeros((1, 4)), C2=np.zeros((1, 2)),
            K=np.zeros((1, 2)))
        decoupled = dataclasses.replace(plant, e1=0.0)
        cl = build_closed_loop(decoupled, ctrl)
        np.testing.assert_allclose(cl.A[:2, 2:], 0)
        np.testing.assert_allclose(cl.A[2:, :2], 0)
        np.testing.assert_allclose(cl.A[:2, :2], np.diag([-1.0, -2.0]))
        np.testing.assert_allclose(cl.B, 0)

    @given(n=st.integers(0, 5))
    @settings(max_examples=12, deadline=None)
    def test_dimension_exactness(self, n):
        z = np.zeros
        ctrl = ControllerParams(n=n, Ac=z((n, n)), Bc1=z((n, 2)), Bc2=z((n, 2)),
                                C1=z((1, n + 2)), C2=z((1, n)), K=z((1, 2)))
        cl = build_closed_loop(reference_plant(), ctrl)
        assert cl.A.shape == (n + 2, n + 2)
        assert cl.B.shape == (n + 2, 2)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            ControllerParams(n=2, Ac=np.zeros((3, 3)), Bc1=np.zeros((2, 2)),
                             Bc2=np.zeros((2, 2)), C1=np.zeros((1, 4)),
                             C2=np.zeros((1, 2)), K=np.zeros((1, 2)))


class TestFeedforward:
    def test_benchmark_values(self, plant):
        u1e, u2e = feedforward_controls(plant)
        assert u1e == pytest.approx(U1E, rel=1e-12)
        assert u2e == pytest.approx(U2E, rel=1e-12)

    def test_no_torque_no_bit_damping(self, plant):
        simple = dataclasses.replace(plant, Te=0.0, k=0.0)
        u1e, _ = feedforward_controls(simple)
        assert u1e == pytest.approx(plant.Omega_e)

    def test_singular_parameters(self, plant):
        with pytest.raises(ParameterError):
            feedforward_controls(dataclasses.replace(plant, g=0.0))
        with pytest.raises(ParameterError):
            feedforward_controls(dataclasses.replace(plant, b=0.0))


class TestEquilibrium:
    def test_benchmark_slope(self, plant):
        assert equilibrium_slope(plant) == pytest.approx(SIGMA1, rel=1e-12)

    def test_zero_damping_zero_torque(self, plant):
        simple = dataclasses.replace(plant, k=0.0, q=0.0)
        assert equilibrium_slope(simple) == 0.0

    @given(st.data())
    @settings(max_examples=50, deadline=None)
    def test_slope_consistent_with_feedforward(self, data):
        p = plants(data.draw)
        u1e, u2e = feedforward_controls(p)
        # the boundary condition and the axial ODE both vanish at equilibrium
        assert p.g * (p.Omega_e - u1e) == pytest.approx(equilibrium_slope(p), abs=1e-9)
        residual = p.B * u2e + p.Omega_e * p.E1 - p.Te * p.E2
        np.testing.assert_allclose(residual, 0, atol=1e-9)


class TestAlphaMax:
    def test_benchmark_value(self, plant):
        assert alpha_max(plant) == pytest.approx(ALPHA_MAX, rel=1e-12)

    def test_impedance_match_is_unbounded(self, plant):
        matched = dataclasses.replace(plant, k=1.0 / plant.c)
        assert alpha_max(matched) == math.inf

    def test_balanced_reflections_give_zero(self, plant):
        # g = -k makes the two reflection products equal in magnitude
        balanced = dataclasses.replace(plant, g=-plant.k)
        assert alpha_max(balanced) == 0.0

    def test_monotone_in_damping_below_impedance(self, plant):
        ks = np.linspace(0.01, 0.9 / plant.c, 8)
        gs = np.linspace(0.01, 0.9 / plant.c, 8)
        for g in gs:
            vals = [alpha_max(dataclasses.replace(plant, k=k, g=g))
                    for k in ks]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        for k in ks:
            vals = [alpha_max(dataclasses.replace(plant, k=k, g=g))
                    for g in gs]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


class TestRiemannFields:
    def test_equilibrium_maps_to_zero(self, plant):
        n = 41
        wt = np.full(n, plant.Omega_e)
        wx = np.full(n, equilibrium_slope(plant))
        np.testing.assert_allclose(riemann_error_fields(plant, wt, wx), 0)

    def test_reversal_convention(self, plant):
        x = np.linspace(0, 1, 21)
        wt = plant.Omega_e + x
        wx = np.full_like(x, equilibrium_slope(plant))
        chi = riemann_error_fields(plant, wt, wx)
        np.testing.assert_allclose(chi[:, 0], x, atol=1e-14)
        np.testing.assert_allclose(chi[:, 1], x[::-1], atol=1e-14)
