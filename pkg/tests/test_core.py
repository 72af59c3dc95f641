import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turntrack.core import EPS_RADIUS, InputVector, Measurement, as_mat2, f_dynamics, h_measure, jacobian_a, jacobian_c
from turntrack.errors import DegenerateRadius

from conftest import rot

coord = st.floats(-1e3, 1e3, allow_nan=False)
radius = st.floats(1.0, 100.0)
angle = st.floats(-math.pi, math.pi)
speed = st.floats(0.0, 50.0)


def state(ce, cn, rho, ang):
    return np.array([ce + rho * math.cos(ang), cn + rho * math.sin(ang)])


def fd_jacobian(pos, u, h):
    J = np.empty((2, 2))
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        J[:, j] = (f_dynamics(pos + step, u) - f_dynamics(pos - step, u)) / (2 * h)
    return J


class TestDynamics:
    def test_east_of_center_moves_north(self):
        np.testing.assert_allclose(f_dynamics([10, 0], InputVector(5, [0, 0])), [0, 5], atol=1e-15)

    def test_north_of_center_moves_west(self):
        np.testing.assert_allclose(f_dynamics([0, 10], InputVector(5, [0, 0])), [-5, 0], atol=1e-15)

    def test_offset_center_speed_and_tangency(self):
        u = InputVector(2, [3, 4])
        x = np.array([3 + 10 * math.cos(0.7), 4 + 10 * math.sin(0.7)])
        v = f_dynamics(x, u)
        assert math.hypot(*v) == pytest.approx(2, rel=1e-12)
        assert abs(np.dot(v, x - u.center)) < 1e-12 * 2 * 10

    def test_degenerate_radius(self):
        with pytest.raises(DegenerateRadius):
            f_dynamics([1, 1], InputVector(1, [1, 1 + 0.5 * EPS_RADIUS]))
        with pytest.raises(DegenerateRadius):
            jacobian_a([1, 1], InputVector(1, [1, 1]))

    def test_input_validation(self):
        with pytest.raises(ValueError):
            InputVector(-1, [0, 0])
        with pytest.raises(ValueError):
            InputVector(1, [np.nan, 0])
        with pytest.raises(ValueError):
            Measurement(0.0, [1, 2, 3])

    @given(ce=coord, cn=coord, rho=radius, ang=angle, v=speed)
    def test_tangency_and_speed(self, ce, cn, rho, ang, v):
        u = InputVector(v, [ce, cn])
        x = state(ce, cn, rho, ang)
        f = f_dynamics(x, u)
        rho_actual = math.hypot(*(x - u.center))
        assert abs(np.dot(f, x - u.center)) <= 1e-12 * max(v, 1e-300) * rho_actual + 1e-300
        assert math.hypot(*f) == pytest.approx(v, rel=1e-12, abs=1e-300)

    @given(ce=coord, cn=coord, rho=radius, ang=angle, v=speed, phi=angle)
    def test_rotation_equivariance(self, ce, cn, rho, ang, v, phi):
        R = rot(phi)
        x = state(ce, cn, rho, ang)
        c = np.array([ce, cn])
        f = f_dynamics(x, InputVector(v, c))
        f_rot = f_dynamics(R @ x, InputVector(v, R @ c))
        np.testing.assert_allclose(f_rot, R @ f, atol=1e-10 * max(v, 1))


class TestJacobian:
    def test_hand_value(self):
        np.testing.assert_allclose(jacobian_a([10, 0], InputVector(5, [0, 0])), [[0, -0.5], [0, 0]], atol=1e-15)

    @given(ce=coord, cn=coord, rho=radius, ang=angle, v=speed)
    def test_trace_zero(self, ce, cn, rho, ang, v):
        A = jacobian_a(state(ce, cn, rho, ang), InputVector(v, [ce, cn]))
        assert abs(np.trace(A)) <= 1e-12 * max(v / rho, 1e-300)

    @settings(max_examples=300)
    @given(ce=coord, cn=coord, rho=radius, ang=angle, v=st.floats(0.1, 50.0))
    def test_matches_finite_differences(self, ce, cn, rho, ang, v):
        u = InputVector(v, [ce, cn])
        x = state(ce, cn, rho, ang)
        A = jacobian_a(x, u)
        J = fd_jacobian(x, u, 1e-6 * rho)
        assert np.linalg.norm(A - J) <= 1e-5 * np.linalg.norm(A)

    def test_finite_differences_seeded_batch(self):
        rng = np.random.default_rng(1234)
        for _ in range(1000):
            c = rng.uniform(-100, 100, 2)
            rho = rng.uniform(1, 100)
            x = state(c[0], c[1], rho, rng.uniform(-math.pi, math.pi))
            u = InputVector(rng.uniform(0.1, 30), c)
            A = jacobian_a(x, u)
            assert np.linalg.norm(A - fd_jacobian(x, u, 1e-6 * rho)) <= 1e-5 * np.linalg.norm(A)


class TestMeasurement:
    @pytest.mark.parametrize("x", [(0, 0), (3.5, -2)])
    def test_identity(self, x):
        assert np.array_equal(h_measure(x), np.array(x, dtype=float))

    def test_returns_copy(self):
        x = np.array([1.0, 2.0])
        y = h_measure(x)
        y[0] = 9
        assert x[0] == 1.0

    def test_jacobian_c(self):
        C = jacobian_c()
        assert np.array_equal(C, np.eye(2))
        assert np.array_equal(C, C.T)
        assert np.array_equal(C @ C, C)
        v = np.array([-2.5, 7.0])
        assert np.array_equal(C @ v, v)


def test_as_mat2_broadcasts():
    assert np.array_equal(as_mat2(2.0), 2 * np.eye(2))
    assert np.array_equal(as_mat2([1, 3]), np.diag([1.0, 3.0]))
    with pytest.raises(ValueError):
        as_mat2(np.ones((3, 3)))
