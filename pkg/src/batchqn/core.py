"""Shared types, the batched objective contract and evaluation accounting.

Every objective is wrapped in a :class:`CountingObjective` before the solver
sees it.  The wrapper is the single place where forward (value) and reverse
(gradient) calls are counted, so all line-search strategies are charged the
same way.
"""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Any, Sequence

import numpy as np

log = logging.getLogger(__name__)

VALID_WIDTHS = (1, 4, 8)


class ContractError(ValueError):
    """A caller violated an input contract (shape, width, dimension)."""


class ConfigurationError(ValueError):
    """Invalid solver or scheme configuration."""


class NumericalError(ArithmeticError):
    """Non-finite quantity where a finite one is required."""


def as_vector(x: Any, n: int | None = None, name: str = "x") -> np.ndarray:
    """Validate ``x`` as a finite 1-D float vector and return a read-only copy."""
    v = np.array(x, dtype=float, copy=True)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ContractError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if n is not None and v.size != n:
        raise ContractError(f"{name} has dimension {v.size}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} has non-finite components")
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class BatchConfig:
    """Number of points evaluated per objective invocation (1, 4 or 8 lanes)."""

    width: int = 1

    def __post_init__(self):
        if self.width not in VALID_WIDTHS:
            raise ConfigurationError(f"batch width must be one of {VALID_WIDTHS}, got {self.width}")


@dataclass
class EvalCounters:
    forward_calls: int = 0
    reverse_calls: int = 0
    ls_iterations: int = 0
    outer_iterations: int = 0

    def snapshot(self) -> "EvalCounters":
        return EvalCounters(**asdict(self))


class Problem:
    """Base class for objectives.

    Subclasses implement :meth:`forward`, which returns the value and an opaque
    tape holding whatever intermediate results the gradient needs, and
    :meth:`reverse`, which turns a tape back into a gradient.  Splitting the
    two lets the gradient reuse a forward pass that was already paid for.
    """

    n: int

    def forward(self, x: np.ndarray) -> tuple[float, Any]:
        raise NotImplementedError

    def reverse(self, x: np.ndarray, tape: Any) -> np.ndarray:
        raise NotImplementedError

    def forward_batch(self, X: np.ndarray) -> tuple[np.ndarray, list]:
        # Override for a vectorised kernel; lanes are independent.
        out = [self.forward(x) for x in X]
        return np.array([v for v, _ in out], dtype=float), [t for _, t in out]

    def value(self, x) -> float:
        return float(self.forward(np.asarray(x, dtype=float))[0])

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.reverse(x, self.forward(x)[1])

    def config(self) -> dict:
        return {}


class CountingObjective:
    """Wraps a :class:`Problem` with batching and call accounting.

    ``eval_batch`` is one forward call regardless of how many lanes are used.
    ``eval_gradient`` is one reverse call; it reuses the tape of a recent
    batch lane at the same point and only pays for a fresh forward pass (also
    counted) when no such lane exists.
    """

    def __init__(self, problem: Problem, batch: BatchConfig | int = 1, tape_cache: int = 64):
        self.problem = problem
        self.n = problem.n
        self.batch = batch if isinstance(batch, BatchConfig) else BatchConfig(batch)
        self.counters = EvalCounters()
        self._tapes: OrderedDict[bytes, Any] = OrderedDict()
        self._tape_cache = tape_cache
        self.gradient_forward_reruns = 0

    @property
    def width(self) -> int:
        return self.batch.width

    def _remember(self, x: np.ndarray, tape: Any) -> None:
        key = x.tobytes()
        self._tapes[key] = tape
        self._tapes.move_to_end(key)
        while len(self._tapes) > self._tape_cache:
            self._tapes.popitem(last=False)

    def _check_points(self, points: Sequence) -> np.ndarray:
        X = np.asarray(points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ContractError(f"batch points must have shape (k, {self.n}), got {X.shape}")
        if not 1 <= X.shape[0] <= self.width:
            raise ContractError(f"batch of {X.shape[0]} points does not fit width {self.width}")
        if not np.all(np.isfinite(X)):
            raise ContractError("batch points have non-finite components")
        return X

    def eval_batch(self, points: Sequence) -> np.ndarray:
        """Evaluate up to ``width`` points in one forward call.

        Lanes beyond ``len(points)`` are padding; by purity they would repeat
        lane 0, so they are not computed.  Non-finite lane values come back as
        ``+inf`` (the flag callers test with ``np.isposinf``).
        """
        X = self._check_points(points)
        self.counters.forward_calls += 1
        values, tapes = self.problem.forward_batch(X)
        values = np.asarray(values, dtype=float).copy()
        bad = ~np.isfinite(values)
        if bad.any():
            log.warning("non-finite objective value in lanes %s", np.flatnonzero(bad).tolist())
            values[bad] = np.inf
        for x, tape, ok in zip(X, tapes, ~bad):
            if ok:
                self._remember(x, tape)
        return values

    def eval_gradient(self, x) -> np.ndarray:
        x = as_vector(x, self.n)
        self.counters.reverse_calls += 1
        tape = self._tapes.get(x.tobytes())
        if tape is None and x.tobytes() not in self._tapes:
            self.counters.forward_calls += 1
            self.gradient_forward_reruns += 1
            _, tape = self.problem.forward(x)
        g = np.asarray(self.problem.reverse(x, tape), dtype=float)
        if g.shape != (self.n,):
            raise ContractError(f"gradient has shape {g.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(g)):
            raise NumericalError("non-finite gradient component")
        return g

    def eval_coupled(self, x) -> tuple[float, np.ndarray]:
        """Value and gradient in one call, the classic ``operator()`` interface.

        Charged as one forward and one reverse call.
        """
        x = as_vector(x, self.n)
        self.counters.forward_calls += 1
        self.counters.reverse_calls += 1
        value, tape = self.problem.forward(x)
        value = float(value)
        if not np.isfinite(value):
            return np.inf, np.full(self.n, np.nan)
        g = np.asarray(self.problem.reverse(x, tape), dtype=float)
        return value, g
