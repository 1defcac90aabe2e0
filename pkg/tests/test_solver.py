import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from batchqn.core import ConfigurationError, ContractError, CountingObjective, Problem
from batchqn.problems import make_curve_problem, make_rosenbrock
from batchqn.solver import (LimitedMemoryHessian, Mode, SolverParams, Status, bfgs_update,
                            minimize, parse_linesearch, search_direction)


class Quadratic(Problem):
    def __init__(self, A, b):
        self.A, self.b, self.n = A, b, len(b)

    def forward(self, x):
        return 0.5 * float(x @ self.A @ x) - float(self.b @ x), None

    def reverse(self, x, tape):
        return self.A @ x - self.b


def test_bfgs_identity_example():
    B = bfgs_update(np.eye(2), [1.0, 0.0], [2.0, 0.0])
    np.testing.assert_allclose(B, [[2.0, 0.0], [0.0, 1.0]])


def test_bfgs_skips_non_positive_curvature():
    B = np.eye(2)
    assert bfgs_update(B, [1.0, 0.0], [-1.0, 0.0]) is B


def test_first_direction_is_steepest_descent():
    H = LimitedMemoryHessian(3, 6)
    np.testing.assert_array_equal(search_direction(H, [1.0, -2.0, 3.0]), [-1.0, 2.0, -3.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_limited_direction_is_descent(n, seed):
    rng = np.random.default_rng(seed)
    H = LimitedMemoryHessian(n, 6)
    for _ in range(rng.integers(0, 10)):
        s = rng.normal(size=n)
        H.update(s, s + 0.1 * rng.normal(size=n))
    g = rng.normal(size=n)
    assert float(g @ search_direction(H, g)) < 0


def test_history_keeps_m_pairs():
    H = LimitedMemoryHessian(2, 3)
    for k in range(5):
        H.update(np.array([1.0, k]), np.array([2.0, k]))
    assert len(H.pairs) == 3


def test_params_validation():
    with pytest.raises(ConfigurationError):
        SolverParams(batch=4, polyfit_order=4)
    with pytest.raises(ConfigurationError):
        SolverParams(c1=0.5, c2=0.4)
    with pytest.raises(ConfigurationError):
        parse_linesearch("bracketing-armijo")
    with pytest.raises(ConfigurationError):
        SolverParams(batch=4, dg_coeffs=(1.0, 2.0))
    assert SolverParams(batch=4, dg_points=8).resolved_dg_points == 0
    assert SolverParams(batch=4, legacy_interface=True).resolved_polyfit_order == 0


def test_width_mismatch_refused():
    prob, x0 = make_rosenbrock()
    with pytest.raises(ConfigurationError):
        minimize(CountingObjective(prob, 4), x0, SolverParams(batch=8))


def test_non_finite_start_refused():
    class Bad(Problem):
        n = 1

        def forward(self, x):
            return np.inf, None

        def reverse(self, x, tape):
            return np.zeros(1)

    with pytest.raises(ContractError):
        minimize(Bad(), [0.0])


@pytest.mark.parametrize("mode", list(Mode))
def test_quadratic_converges(mode):
    rng = np.random.default_rng(3)
    M = rng.normal(size=(6, 6))
    A = M @ M.T + 6 * np.eye(6)
    b = rng.normal(size=6)
    x, m = minimize(Quadratic(A, b), np.zeros(6), SolverParams(mode=mode, eps_rel=0, eps_abs=1e-10))
    assert m.status is Status.CONVERGED
    np.testing.assert_allclose(x, np.linalg.solve(A, b), atol=1e-9)


def test_already_optimal_start():
    prob, _ = make_rosenbrock()
    x, m = minimize(prob, [1.0, 1.0])
    assert m.iterations == 0 and m.status is Status.CONVERGED


def test_max_iterations_status():
    prob, x0 = make_rosenbrock()
    _, m = minimize(prob, x0, SolverParams(max_iterations=3))
    assert m.iterations == 3 and m.status is Status.MAX_ITERATIONS


def test_callback_sees_every_step():
    prob, x0 = make_rosenbrock()
    seen = []
    _, m = minimize(prob, x0, SolverParams(), callback=lambda k, x, f: seen.append(k))
    assert seen == list(range(1, m.iterations + 1))


def test_value_never_increases():
    prob, x0 = make_curve_problem(2)
    vals = []
    minimize(prob, x0, SolverParams(batch=4, eps_rel=3e-4).with_linesearch("backtracking-wolfe"),
             callback=lambda k, x, f: vals.append(f))
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_split_interface_reverse_calls_bounded():
    prob, x0 = make_curve_problem(1)
    for w in (4, 8):
        _, m = minimize(prob, x0, SolverParams(batch=w, eps_rel=3e-4).with_linesearch("backtracking-wolfe"))
        assert m.counters.reverse_calls <= m.iterations + 1


def test_legacy_counts_forward_equals_reverse():
    prob, x0 = make_curve_problem(1)
    _, m = minimize(prob, x0, SolverParams(legacy_interface=True, eps_rel=3e-4))
    assert m.counters.forward_calls == m.counters.reverse_calls == 1 + m.counters.ls_iterations
