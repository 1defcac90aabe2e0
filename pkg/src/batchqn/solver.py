"""BFGS / L-BFGS outer loop."""
from __future__ import annotations

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (BatchConfig, ConfigurationError, ContractError, CountingObjective,
                   EvalCounters, Problem, as_vector)
from .fd import VALID_POINTS, FdScheme
from .linesearch import (Condition, LineEvaluator, LineSearchFailure, LsState, Style,
                         ls_multipoint, ls_polyfit, ls_single)

log = logging.getLogger(__name__)

CURVATURE_RTOL = 1e-10

LINESEARCH_NAMES = {
    "backtracking-armijo": (Style.BACKTRACKING, Condition.ARMIJO),
    "backtracking-wolfe": (Style.BACKTRACKING, Condition.WOLFE),
    "backtracking-strong-wolfe": (Style.BACKTRACKING, Condition.STRONG_WOLFE),
    "bracketing-wolfe": (Style.BRACKETING, Condition.WOLFE),
}


class Mode(enum.Enum):
    DENSE = "dense"
    LIMITED = "limited"


class Status(enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    LINESEARCH_FAILED = "linesearch_failed"


@dataclass(frozen=True)
class SolverParams:
    """Solver configuration.

    ``polyfit_order=None`` and ``dg_points=None`` pick the batch defaults
    (``W - 1`` and ``W``).  ``polyfit_order=0`` disables the fit.  A
    ``dg_points`` value that is 0, not an even stencil size, or wider than the
    batch disables the FD slope and falls back to ``grad . p``.
    ``legacy_interface`` restores the coupled value+gradient call with a
    single-point search, whatever the batch width.  ``ls_batching=False`` keeps
    single-point trials and uses the batch only for FD stencils.
    """

    eps_abs: float = 1e-10
    eps_rel: float = 1e-5
    max_iterations: int = 0
    ls_condition: Condition = Condition.ARMIJO
    ls_style: Style = Style.BACKTRACKING
    max_ls_iterations: int = 20
    m: int = 6
    mode: Mode = Mode.LIMITED
    c1: float = 1e-4
    c2: float = 0.9
    batch: BatchConfig = field(default_factory=BatchConfig)
    polyfit_order: int | None = None
    dg_points: int | None = None
    h: float | None = None
    dg_coeffs: tuple[float, ...] | None = None
    legacy_interface: bool = False
    ls_batching: bool = True

    def __post_init__(self):
        if isinstance(self.batch, int):
            object.__setattr__(self, "batch", BatchConfig(self.batch))
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ConfigurationError("tolerances must be non-negative")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0 (0 = unlimited)")
        if self.max_ls_iterations < 1:
            raise ConfigurationError("max_ls_iterations must be >= 1")
        if self.m < 1:
            raise ConfigurationError("history size m must be >= 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ConfigurationError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        if self.h is not None and not self.h > 0:
            raise ConfigurationError("h must be positive")
        if self.polyfit_order is not None:
            if self.polyfit_order < 0 or self.polyfit_order > self.width - 1:
                raise ConfigurationError(
                    f"polyfit order must be in [0, {self.width - 1}] for width {self.width}")
        if self.dg_coeffs is not None:
            object.__setattr__(self, "dg_coeffs", tuple(float(c) for c in self.dg_coeffs))
            if len(self.dg_coeffs) != self.resolved_dg_points:
                raise ConfigurationError(
                    f"{len(self.dg_coeffs)} coefficients for a {self.resolved_dg_points}-point stencil")

    @property
    def width(self) -> int:
        return self.batch.width

    @property
    def resolved_polyfit_order(self) -> int:
        if self.legacy_interface or self.width == 1 or not self.ls_batching:
            return 0
        return self.width - 1 if self.polyfit_order is None else self.polyfit_order

    @property
    def resolved_dg_points(self) -> int:
        if self.legacy_interface:
            return 0
        pts = self.width if self.dg_points is None else self.dg_points
        if pts not in VALID_POINTS or pts > self.width:
            return 0
        return pts

    def fd_scheme(self) -> FdScheme | None:
        pts = self.resolved_dg_points
        if not pts:
            return None
        return FdScheme(points=pts, h=self.h, coeffs=self.dg_coeffs)

    def with_linesearch(self, name: str) -> "SolverParams":
        from dataclasses import replace
        style, cond = parse_linesearch(name)
        return replace(self, ls_style=style, ls_condition=cond)


def parse_linesearch(name: str) -> tuple[Style, Condition]:
    try:
        return LINESEARCH_NAMES[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown line search {name!r}; choose from {sorted(LINESEARCH_NAMES)}") from None


def linesearch_name(style: Style, cond: Condition) -> str:
    return f"{style.value}-{cond.value}"


@dataclass(frozen=True)
class HistoryPair:
    s: np.ndarray
    y: np.ndarray
    rho: float


def curvature_ok(s: np.ndarray, y: np.ndarray) -> bool:
    return float(y @ s) > CURVATURE_RTOL * np.linalg.norm(s) * np.linalg.norm(y)


def bfgs_update(B: np.ndarray, s, y) -> np.ndarray:
    """``B + y y^T / y^T s - B s s^T B / s^T B s``; returns ``B`` unchanged if curvature fails."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if not curvature_ok(s, y):
        return B
    Bs = B @ s
    return B + np.outer(y, y) / (y @ s) - np.outer(Bs, Bs) / (s @ Bs)


class DenseHessian:
    """Full ``n x n`` Hessian estimate, starting from the identity."""

    def __init__(self, n: int):
        self.B = np.eye(n)

    def reset(self) -> None:
        self.B = np.eye(self.B.shape[0])

    def direction(self, g: np.ndarray) -> np.ndarray:
        try:
            p = np.linalg.solve(self.B, -g)
        except np.linalg.LinAlgError:
            p = None
        if p is None or not np.all(np.isfinite(p)):
            log.warning("singular Hessian estimate; resetting to identity")
            self.reset()
            return -g
        return p

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        B = bfgs_update(self.B, s, y)
        if B is self.B:
            return False
        self.B = B
        return True


class LimitedMemoryHessian:
    """The ``m`` most recent ``(s, y)`` pairs applied through the two-loop recursion."""

    def __init__(self, n: int, m: int):
        self.n = n
        self.pairs: deque[HistoryPair] = deque(maxlen=m)

    def reset(self) -> None:
        self.pairs.clear()

    @property
    def gamma(self) -> float:
        if not self.pairs:
            return 1.0
        last = self.pairs[-1]
        return float(last.s @ last.y) / float(last.y @ last.y)

    def direction(self, g: np.ndarray) -> np.ndarray:
        q = g.copy()
        a = np.empty(len(self.pairs))
        for i in range(len(self.pairs) - 1, -1, -1):
            pr = self.pairs[i]
            a[i] = pr.rho * (pr.s @ q)
            q -= a[i] * pr.y
        r = self.gamma * q
        for i, pr in enumerate(self.pairs):
            b = pr.rho * (pr.y @ r)
            r += (a[i] - b) * pr.s
        return -r

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        if not curvature_ok(s, y):
            return False
        self.pairs.append(HistoryPair(s, y, 1.0 / float(y @ s)))
        return True


def search_direction(H: DenseHessian | LimitedMemoryHessian, g) -> np.ndarray:
    return H.direction(np.asarray(g, dtype=float))


@dataclass
class RunMetrics:
    iterations: int
    value: float
    grad_norm: float
    counters: EvalCounters
    wall_time: float
    status: Status
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status is not Status.LINESEARCH_FAILED


def minimize(objective: CountingObjective | Problem, x0, params: SolverParams | None = None,
             callback: Callable[[int, np.ndarray, float], None] | None = None
             ) -> tuple[np.ndarray, RunMetrics]:
    """Minimise ``objective`` from ``x0``.

    Stops when ``|g| <= max(eps_abs, eps_rel |x|)``, after ``max_iterations``
    accepted steps, or when the line search fails (the current iterate is
    returned with status ``LINESEARCH_FAILED``).  ``callback(k, x, f)`` runs
    after each accepted step.
    """
    params = params or SolverParams()
    if isinstance(objective, Problem):
        objective = CountingObjective(objective, params.batch)
    elif objective.width != params.width:
        raise ConfigurationError(
            f"objective width {objective.width} does not match params width {params.width}")
    x = as_vector(x0, objective.n, "x0").copy()
    ev = LineEvaluator(objective, legacy=params.legacy_interface, scheme=params.fd_scheme())
    counters = objective.counters

    if params.legacy_interface or params.width == 1 or not params.ls_batching:
        search = ls_single
    elif params.resolved_polyfit_order > 0:
        search = ls_polyfit
    else:
        search = ls_multipoint

    start = time.perf_counter()
    f = ev.value(x)
    if not np.isfinite(f):
        raise ContractError("objective is not finite at x0")
    g = ev.gradient(x)
    H = DenseHessian(objective.n) if params.mode is Mode.DENSE else LimitedMemoryHessian(objective.n, params.m)

    k = 0
    message = ""
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= max(params.eps_abs, params.eps_rel * float(np.linalg.norm(x))):
            status = Status.CONVERGED
            break
        if params.max_iterations and k >= params.max_iterations:
            status = Status.MAX_ITERATIONS
            break
        p = search_direction(H, g)
        dg0 = float(g @ p)
        if not dg0 < 0:
            log.debug("iteration %d: not a descent direction, restarting from -g", k)
            H.reset()
            p = -g
            dg0 = float(g @ p)
        alpha0 = 1.0 / gnorm if k == 0 else 1.0
        state = LsState(x, p, alpha0, f, dg0)
        try:
            _, x_new, f_new = search(state, ev, params)
        except LineSearchFailure as exc:
            status = Status.LINESEARCH_FAILED
            message = str(exc)
            log.info("line search failed at iteration %d: %s", k, exc)
            break
        g_new = ev.gradient(x_new)
        H.update(x_new - x, g_new - g)
        x, f, g = x_new, f_new, g_new
        k += 1
        counters.outer_iterations = k
        if callback is not None:
            callback(k, x, f)

    metrics = RunMetrics(
        iterations=k,
        value=float(f),
        grad_norm=float(np.linalg.norm(g)),
        counters=counters.snapshot(),
        wall_time=time.perf_counter() - start,
        status=status,
        message=message,
    )
    return x, metrics
