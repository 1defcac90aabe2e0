"""Benchmark objectives with analytic gradients.

* ``curve``: a synthetic 33-parameter / 14-output curve map fitted by a sum of
  squared output errors against the outputs at a target parameter vector.
* ``expectation``: half the squared distance between Monte Carlo means of
  smoothed call-style payoffs and target prices, on frozen noise.
* ``rosenbrock``: the chained Rosenbrock function.

Each ``make_*`` returns ``(problem, x0)``.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .core import Problem


class CurveCalibrationProblem(Problem):
    """``f(x) = sum_i (g(x)_i - g(x_min)_i)^2`` with ``g(x) = A tanh(x) + Q x^2``.

    Parameters are rate-sized (target components in [0.01, 0.05]).  ``A`` has
    singular values spread geometrically from 10 down to 0.01, so like a real
    bootstrapped curve the outputs are far more sensitive to some parameter
    combinations than to others.
    """

    n_params = 33
    n_outputs = 14
    singular_values = (10.0, 0.01)

    def __init__(self, seed: int = 1):
        self.seed = seed
        rng = np.random.default_rng(seed)
        n, m = self.n_params, self.n_outputs
        self.n = n
        U, _ = np.linalg.qr(rng.normal(size=(m, m)))
        V, _ = np.linalg.qr(rng.normal(size=(n, m)))
        self.A = (U * np.geomspace(*self.singular_values, m)) @ V.T
        self.Q = rng.normal(size=(m, n)) / np.sqrt(n)
        self.x_min = rng.uniform(0.01, 0.05, size=n)
        self.target = self.outputs(self.x_min)
        self.x0 = self.x_min * rng.uniform(0.9, 1.1, size=n)

    def outputs(self, X):
        X = np.asarray(X, dtype=float)
        return np.tanh(X) @ self.A.T + (X * X) @ self.Q.T

    def forward(self, x):
        v, tapes = self.forward_batch(np.asarray(x, dtype=float)[None, :])
        return float(v[0]), tapes[0]

    def forward_batch(self, X):
        R = self.outputs(X) - self.target
        return np.einsum("ij,ij->i", R, R), list(R)

    def reverse(self, x, r):
        t = np.tanh(x)
        return 2.0 * (self.A.T @ r) * (1.0 - t * t) + 4.0 * (self.Q.T @ r) * x

    def config(self):
        return {"problem": "curve", "seed": self.seed}


class ExpectationLossProblem(Problem):
    """``G(x) = 1/2 sum_i (mean_w y_i(x, w) - C_i)^2`` over frozen paths.

    Path payoffs are ``softplus_beta(z_i - K_i)`` with the linear factor
    ``z_i = sum_j x_j (L_ij + eps_ij(w))``.  The gradient is the pathwise
    derivative of the sample mean; the forward pass leaves the per-path
    sigmoid weights on the tape so the gradient needs no re-simulation.

    With ``target_noise = 0`` the targets are the model prices at ``x_min``
    and ``G(x_min) = 0``.  A positive value perturbs the targets
    multiplicatively, so the best fit has a non-zero residual.
    """

    def __init__(self, seed: int = 7, n: int = 4, m: int = 8, paths: int = 1000,
                 target_noise: float = 0.0, beta: float = 50.0):
        if paths < 100:
            raise ValueError("expectation problem needs at least 100 paths")
        self.seed, self.n, self.m, self.paths = seed, n, m, paths
        self.target_noise, self.beta = target_noise, beta
        rng = np.random.default_rng(seed)
        self.L = rng.uniform(-1.0, 1.0, size=(m, n))
        self.eps = 0.3 * rng.normal(size=(paths, m, n))
        self.x_min = rng.uniform(0.5, 1.0, size=n)
        self.K = self.L @ self.x_min + rng.uniform(-0.2, 0.2, size=m)
        xi = rng.normal(size=m)
        self.C = self.prices(self.x_min) * (1.0 + target_noise * xi)
        self.x0 = 0.9 * self.x_min

    def _moneyness(self, x):
        # (paths, m)
        return self.L @ x + self.eps @ x - self.K

    def prices(self, x) -> np.ndarray:
        u = self._moneyness(np.asarray(x, dtype=float))
        return (np.logaddexp(0.0, self.beta * u) / self.beta).mean(axis=0)

    def forward(self, x):
        u = self._moneyness(x)
        ybar = (np.logaddexp(0.0, self.beta * u) / self.beta).mean(axis=0)
        r = ybar - self.C
        weights = 0.5 * (1.0 + np.tanh(0.5 * self.beta * u))
        return 0.5 * float(r @ r), (r, weights)

    def reverse(self, x, tape):
        r, S = tape
        dy = S.mean(axis=0)[:, None] * self.L + np.einsum("wi,wij->ij", S, self.eps) / self.paths
        return r @ dy

    def config(self):
        return {"problem": "expectation", "seed": self.seed, "n": self.n, "m": self.m,
                "paths": self.paths, "target_noise": self.target_noise, "beta": self.beta}


class RosenbrockProblem(Problem):
    """Chained Rosenbrock on consecutive pairs; minimum 0 at all ones."""

    def __init__(self, n: int = 2):
        if n < 2 or n % 2:
            raise ValueError("Rosenbrock dimension must be even and >= 2")
        self.n = n
        self.x_min = np.ones(n)
        self.x0 = np.tile([-1.2, 1.0], n // 2)

    def forward(self, x):
        v, _ = self.forward_batch(np.asarray(x, dtype=float)[None, :])
        return float(v[0]), None

    def forward_batch(self, X):
        a, b = X[:, 0::2], X[:, 1::2]
        return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1), [None] * len(X)

    def reverse(self, x, tape=None):
        a, b = x[0::2], x[1::2]
        g = np.empty_like(x)
        g[0::2] = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a)
        g[1::2] = 200.0 * (b - a * a)
        return g

    def config(self):
        return {"problem": "rosenbrock", "n": self.n}


def make_curve_problem(seed: int = 1) -> tuple[CurveCalibrationProblem, np.ndarray]:
    """Start point is the target scaled componentwise by U(0.9, 1.1)."""
    prob = CurveCalibrationProblem(seed)
    return prob, prob.x0.copy()


def make_expectation_problem(seed: int = 7, n: int = 4, m: int = 8, paths: int = 1000,
                             target_noise: float = 0.0, beta: float = 50.0
                             ) -> tuple[ExpectationLossProblem, np.ndarray]:
    """Start point is 90% of the target parameters."""
    prob = ExpectationLossProblem(seed, n, m, paths, target_noise, beta)
    return prob, prob.x0.copy()


def make_rosenbrock(n: int = 2) -> tuple[RosenbrockProblem, np.ndarray]:
    prob = RosenbrockProblem(n)
    return prob, prob.x0.copy()


PROBLEMS = {
    "curve": make_curve_problem,
    "expectation": make_expectation_problem,
    "rosenbrock": make_rosenbrock,
}


def problem_from_config(cfg: dict[str, Any]) -> tuple[Problem, np.ndarray]:
    cfg = dict(cfg)
    name = cfg.pop("problem")
    if name not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(PROBLEMS)}")
    return PROBLEMS[name](**cfg)


def dump_config(problem: Problem) -> str:
    return json.dumps(problem.config(), sort_keys=True)


def load_config(text: str) -> tuple[Problem, np.ndarray]:
    return problem_from_config(json.loads(text))
