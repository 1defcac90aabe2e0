from fractions import Fraction

import numpy as np
import pytest

from batchqn.core import ConfigurationError, CountingObjective, NumericalError, Problem
from batchqn.fd import (CENTRAL_COEFFS, FdScheme, central_offsets, default_coeffs,
                        directional_derivative, fd_points, set_coeffs)
from batchqn.problems import make_curve_problem, make_expectation_problem, make_rosenbrock


class Fn(Problem):
    def __init__(self, f, n=1):
        self.f, self.n = f, n

    def forward(self, x):
        return float(self.f(x)), None

    def reverse(self, x, tape):
        raise NotImplementedError


def central_weights(points):
    """First-derivative weights by solving the moment equations exactly."""
    offs = central_offsets(points)
    k = len(offs)
    # sum_j c_j o_j^i = [i == 1], i = 0..k-1
    A = [[Fraction(o) ** i for o in offs] for i in range(k)]
    b = [Fraction(int(i == 1)) for i in range(k)]
    for col in range(k):
        piv = next(r for r in range(col, k) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        b[col], b[piv] = b[piv], b[col]
        for r in range(k):
            if r != col and A[r][col] != 0:
                m = A[r][col] / A[col][col]
                A[r] = [a - m * c for a, c in zip(A[r], A[col])]
                b[r] -= m * b[col]
    return tuple(b[i] / A[i][i] for i in range(k))


@pytest.mark.parametrize("points", [2, 4, 6, 8])
def test_default_coefficients_match_exact_solution(points):
    assert CENTRAL_COEFFS[points] == central_weights(points)


def test_displayed_coefficients_bitwise():
    assert default_coeffs(4) == (1 / 12, -2 / 3, 2 / 3, -1 / 12)
    assert default_coeffs(8) == (1 / 280, -4 / 105, 1 / 5, -4 / 5, 4 / 5, -1 / 5, 4 / 105, -1 / 280)


@pytest.mark.parametrize("points", [2, 4, 6, 8])
def test_antisymmetric_and_zero_sum(points):
    c = CENTRAL_COEFFS[points]
    assert sum(c) == 0
    assert all(c[i] == -c[-1 - i] for i in range(len(c)))


def test_fd_points_examples():
    np.testing.assert_allclose(np.ravel(fd_points([0.0], [1.0], 0.1, 4)), [-0.2, -0.1, 0.1, 0.2])
    x, p = np.array([1.0, 2.0]), np.array([0.5, -1.0])
    pts = fd_points(x, p, 0.01, 2)
    np.testing.assert_array_equal(pts[0], x - 0.01 * p)
    np.testing.assert_array_equal(pts[1], x + 0.01 * p)
    for q in fd_points(x, np.zeros(2), 0.1, 8):
        np.testing.assert_array_equal(q, x)


def test_linear_function_two_point_exact():
    obj = CountingObjective(Fn(lambda x: 3.0 * x[0]), 4)
    for h in (1e-3, 0.25, 2.0):
        assert directional_derivative(obj, [0.7], [1.0], FdScheme(2, h=h)) == pytest.approx(3.0, abs=1e-12)


def test_square_four_point_worked_example():
    obj = CountingObjective(Fn(lambda x: x[0] ** 2), 4)
    hand = (1 / 0.1) * ((1 / 12) * 0.64 - (2 / 3) * 0.81 + (2 / 3) * 1.21 - (1 / 12) * 1.44)
    assert hand == pytest.approx(2.0, abs=1e-12)
    assert directional_derivative(obj, [1.0], [1.0], FdScheme(4, h=0.1)) == pytest.approx(2.0, abs=1e-12)
    assert obj.counters.forward_calls == 1


def test_sin_eight_point():
    obj = CountingObjective(Fn(lambda x: np.sin(x[0])), 8)
    assert directional_derivative(obj, [0.0], [1.0], FdScheme(8, h=1e-3)) == pytest.approx(1.0, abs=1e-12)


def test_one_sided_forward_difference():
    obj = CountingObjective(Fn(lambda x: x[0] ** 2), 4)
    d = directional_derivative(obj, [1.0], [1.0], FdScheme(2, h=0.1, one_sided=True))
    assert d == pytest.approx(2.1, abs=1e-12)  # (1.21 - 1) / 0.1


def test_stencil_split_when_wider_than_batch():
    obj = CountingObjective(Fn(lambda x: x[0] ** 3), 4)
    d = directional_derivative(obj, [1.0], [1.0], FdScheme(8, h=0.01))
    assert d == pytest.approx(3.0, abs=1e-10)
    assert obj.counters.forward_calls == 2


def test_non_finite_stencil_value():
    obj = CountingObjective(Fn(lambda x: np.nan if x[0] > 1.05 else x[0]), 4)
    with pytest.raises(NumericalError):
        directional_derivative(obj, [1.0], [1.0], FdScheme(4, h=0.1))


def test_set_coeffs():
    s = FdScheme(4)
    assert set_coeffs(s, [1, 2, 3, 4]).coeffs == (1.0, 2.0, 3.0, 4.0)
    with pytest.raises(ConfigurationError):
        set_coeffs(s, [1, 2, 3])
    with pytest.raises(ConfigurationError):
        FdScheme(5)


def test_explicit_defaults_behave_like_defaults():
    from batchqn.solver import SolverParams, minimize

    prob, x0 = make_curve_problem(1)
    base = SolverParams(batch=4, eps_rel=3e-4).with_linesearch("backtracking-wolfe")
    explicit = SolverParams(batch=4, eps_rel=3e-4, dg_points=4,
                            dg_coeffs=default_coeffs(4)).with_linesearch("backtracking-wolfe")
    xa, ma = minimize(prob, x0, base)
    xb, mb = minimize(prob, x0, explicit)
    np.testing.assert_array_equal(xa, xb)
    assert ma.counters == mb.counters


def test_default_h_scales_with_x():
    s = FdScheme(4)
    assert s.step(np.zeros(3)) == pytest.approx(1e-7)
    assert s.step(np.array([3.0, 4.0])) == pytest.approx(6e-7)


@pytest.mark.parametrize("make", [make_curve_problem, make_expectation_problem, make_rosenbrock])
def test_consistent_with_gradient_dot_direction(make):
    prob, x0 = make()
    obj = CountingObjective(prob, 4)
    rng = np.random.default_rng(11)
    for _ in range(10):
        x = x0 + 0.05 * rng.normal(size=prob.n) * np.maximum(np.abs(x0), 0.1)
        p = rng.normal(size=prob.n)
        exact = float(prob.gradient(x) @ p)
        fd = directional_derivative(obj, x, p, FdScheme(4, h=1e-5))
        assert abs(fd - exact) <= 1e-5 * (1 + abs(exact))
