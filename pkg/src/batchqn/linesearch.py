"""Step-length selection along a descent direction.

Three strategies share one acceptance test:

* single point (width 1): the classic backtracking / bracketing search,
* multipoint: one batched call over a grid of step multiples, keep the argmin,
* polyfit: fit a polynomial to the same grid and jump to its minimiser when it
  lies in ``[alpha/4, 4 alpha]`` and improves on the previous point; otherwise
  fall back to the multipoint argmin.

Returned steps are measured from the line-search origin.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .core import CountingObjective, NumericalError
from .fd import FdScheme, combine, stencil
from .polyfit import SingularFitError, polyfit_fit, select_alpha_min

log = logging.getLogger(__name__)

MIN_STEP = 1e-20
MAX_STEP = 1e20
EXPANSION = 2.1

MULTIPLIERS = {
    4: np.array([0.5, 1.0, 1.5, 2.0]),
    8: np.array([0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]),
}


class Condition(enum.Enum):
    ARMIJO = "armijo"
    WOLFE = "wolfe"
    STRONG_WOLFE = "strong-wolfe"


class Style(enum.Enum):
    BACKTRACKING = "backtracking"
    BRACKETING = "bracketing"


class LineSearchFailure(RuntimeError):
    """No acceptable step within the iteration budget or step bounds."""


@dataclass
class LsState:
    x_prev: np.ndarray
    p: np.ndarray
    alpha: float
    f_prev: float
    dg0: float
    i: int = 0

    def __post_init__(self):
        if not self.dg0 < 0:
            raise ValueError(f"line search needs a descent direction, got dg0={self.dg0}")


def candidate_steps(x_prev, p, alpha: float, W: int) -> list[tuple[float, np.ndarray]]:
    """The batched grid: multiples 1/2..2 (W=4) or 1/4..2 (W=8) of ``alpha``."""
    if W not in MULTIPLIERS:
        raise ValueError(f"candidate grid defined for W in (4, 8), got {W}")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x_prev = np.asarray(x_prev, dtype=float)
    p = np.asarray(p, dtype=float)
    return [(float(t), x_prev + t * p) for t in MULTIPLIERS[W] * alpha]


def check_condition(cond: Condition, f0: float, dg0: float, f_alpha: float,
                    dg_alpha: float | None, alpha: float, c1: float, c2: float) -> bool:
    armijo = f_alpha <= f0 + c1 * alpha * dg0
    if cond is Condition.ARMIJO or not armijo:
        return bool(armijo)
    if cond is Condition.WOLFE:
        return bool(dg_alpha >= c2 * dg0)
    return bool(abs(dg_alpha) <= c2 * abs(dg0))


class LineEvaluator:
    """What the line search may ask of the objective: values, slopes, gradients.

    In legacy mode every value comes from the coupled value+gradient call, so
    slopes and the final gradient are free but every trial costs a reverse
    call.  In split mode values are forward batches, slopes come from the FD
    scheme (or a gradient call when the scheme is disabled) and the gradient is
    requested only for the accepted point.
    """

    def __init__(self, objective: CountingObjective, legacy: bool = False,
                 scheme: FdScheme | None = None):
        self.objective = objective
        self.legacy = legacy
        self.scheme = scheme if scheme is not None and scheme.enabled and not legacy else None
        self._grad_key: bytes | None = None
        self._grad: np.ndarray | None = None

    @property
    def width(self) -> int:
        return 1 if self.legacy else self.objective.width

    def _store(self, x: np.ndarray, g: np.ndarray) -> None:
        self._grad_key, self._grad = x.tobytes(), g

    def value(self, x: np.ndarray) -> float:
        if self.legacy:
            f, g = self.objective.eval_coupled(x)
            self._store(x, g)
            return f
        return float(self.objective.eval_batch([x])[0])

    def values(self, X: np.ndarray) -> np.ndarray:
        if self.legacy:
            return np.array([self.value(x) for x in X])
        return self.objective.eval_batch(X)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self._grad_key == x.tobytes():
            return self._grad
        if self.legacy:
            self.value(x)
            return self._grad
        g = self.objective.eval_gradient(x)
        self._store(x, g)
        return g

    def derivative(self, x: np.ndarray, p: np.ndarray) -> float:
        if self.scheme is None:
            return float(self.gradient(x) @ p)
        X, h = stencil(self.scheme, x, p)
        return combine(self.scheme, self.objective.eval_batch(X), h)

    def value_and_derivative(self, x: np.ndarray, p: np.ndarray, want_dg: bool):
        """Value at ``x``; the slope too when the stencil fits in the same batch."""
        if want_dg and self.scheme is not None and len(self.scheme.offsets) + 1 <= self.width:
            X, h = stencil(self.scheme, x, p)
            vals = self.objective.eval_batch(np.vstack([x, X]))
            try:
                return float(vals[0]), combine(self.scheme, vals[1:], h)
            except NumericalError:
                return float(vals[0]), float("nan")
        return self.value(x), None


ACCEPT, SHRINK, GROW = "accept", "shrink", "grow"


def _judge(ev: LineEvaluator, state: LsState, params, t: float, x: np.ndarray,
           f: float, dg: float | None = None) -> tuple[str, float | None]:
    cond = params.ls_condition
    if not f <= state.f_prev + params.c1 * t * state.dg0:
        return SHRINK, dg
    if cond is Condition.ARMIJO:
        return ACCEPT, dg
    if dg is None:
        try:
            dg = ev.derivative(x, state.p)
        except NumericalError:
            dg = float("nan")
    if not np.isfinite(dg):
        return SHRINK, dg
    if dg < params.c2 * state.dg0:
        return GROW, dg
    if cond is Condition.WOLFE:
        return ACCEPT, dg
    if dg > -params.c2 * state.dg0:
        return SHRINK, dg
    return ACCEPT, dg


def _check_bounds(step: float) -> None:
    if not MIN_STEP <= step <= MAX_STEP:
        raise LineSearchFailure(f"step {step:g} left [{MIN_STEP:g}, {MAX_STEP:g}]")


def ls_single(state: LsState, ev: LineEvaluator, params) -> tuple[float, np.ndarray, float]:
    counters = ev.objective.counters
    step = state.alpha
    lo, hi = 0.0, np.inf
    for state.i in range(params.max_ls_iterations):
        x = state.x_prev + step * state.p
        f = ev.value(x)
        counters.ls_iterations += 1
        verdict, _ = _judge(ev, state, params, step, x, f)
        if verdict == ACCEPT:
            return step, x, f
        if params.ls_style is Style.BACKTRACKING:
            step *= 0.5 if verdict == SHRINK else EXPANSION
        else:
            if verdict == SHRINK:
                hi = step
            else:
                lo = step
            step = 0.5 * (lo + hi) if hi < np.inf else step * EXPANSION
        _check_bounds(step)
    raise LineSearchFailure(f"no acceptable step after {params.max_ls_iterations} iterations")


def _fitted_step(mult: np.ndarray, vals: np.ndarray, order: int) -> float | None:
    """Minimiser of the fitted polynomial in units of alpha, or None."""
    ok = np.isfinite(vals)
    if ok.sum() < order + 1:
        return None
    try:
        poly = polyfit_fit(mult[ok], vals[ok], order)
    except SingularFitError:
        return None
    return select_alpha_min(poly, 1.0)


def ls_multipoint(state: LsState, ev: LineEvaluator, params,
                  polyfit_order: int = 0) -> tuple[float, np.ndarray, float]:
    """Batched grid search; with ``polyfit_order > 0`` this is the polyfit search.

    Each grid is anchored at the previous line-search point: lanes sit at
    ``anchor + m * alpha`` for the multipliers ``m`` of :data:`MULTIPLIERS`.
    The anchor starts at the origin and advances to the chosen point when it
    is too short (slope still steep); on overshoot it stays put.  The next
    ``alpha`` is half the distance from the anchor to the chosen step.
    """
    counters = ev.objective.counters
    W = ev.width
    mult = MULTIPLIERS[W]
    alpha = state.alpha
    anchor, f_anchor = 0.0, state.f_prev
    lo, f_lo, hi = 0.0, state.f_prev, np.inf
    seeded = False
    want_dg = params.ls_condition is not Condition.ARMIJO
    for state.i in range(params.max_ls_iterations):
        steps = anchor + mult * alpha
        X = state.x_prev + steps[:, None] * state.p
        vals = ev.values(X)
        counters.ls_iterations += 1
        j = int(np.argmin(vals))  # first minimum = smallest multiplier
        t, x, f, dg = float(steps[j]), X[j], float(vals[j]), None

        if polyfit_order > 0:
            u = _fitted_step(mult, vals, polyfit_order)
            if u is not None:
                t_min = anchor + u * alpha
                x_min = state.x_prev + t_min * state.p
                f_min, dg_min = ev.value_and_derivative(x_min, state.p, want_dg)
                if f_min < f_anchor:
                    t, x, f, dg = t_min, x_min, f_min, dg_min
                else:
                    log.debug("fitted step %g rejected: no decrease", t_min)

        verdict, dg = _judge(ev, state, params, t, x, f, dg)
        if verdict == ACCEPT:
            return t, x, f

        if params.ls_style is Style.BACKTRACKING:
            if verdict == GROW:
                # still descending past the grid end: widen instead of refining
                alpha = (t - anchor) if t >= steps[-1] else 0.5 * (t - anchor)
                anchor, f_anchor = t, f
            else:
                alpha = 0.5 * (t - anchor)
        else:
            if not seeded:
                seeded = True
                if j + 1 < W:
                    hi = float(steps[j + 1])
                if j > 0 and vals[j - 1] <= state.f_prev + params.c1 * steps[j - 1] * state.dg0:
                    lo, f_lo = float(steps[j - 1]), float(vals[j - 1])
            if verdict == SHRINK:
                hi = min(hi, t)
            elif t > lo:
                lo, f_lo = t, f
            if lo >= hi:
                lo, f_lo = 0.0, state.f_prev
            if hi < np.inf:
                anchor, f_anchor = lo, f_lo
                alpha = 0.5 * (hi - lo)
            else:
                alpha = t - anchor
                anchor, f_anchor = t, f
        if not alpha > MIN_STEP:
            raise LineSearchFailure(f"step increment {alpha:g} below {MIN_STEP:g}")
        _check_bounds(anchor + alpha)
    raise LineSearchFailure(f"no acceptable step after {params.max_ls_iterations} batched iterations")


def ls_polyfit(state: LsState, ev: LineEvaluator, params) -> tuple[float, np.ndarray, float]:
    order = params.polyfit_order if params.polyfit_order else ev.width - 1
    return ls_multipoint(state, ev, params, polyfit_order=order)
