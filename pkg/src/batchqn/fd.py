"""Finite-difference directional derivatives along a search direction.

During the line search the solver only needs ``d/dt f(x + t p)``, which a
stencil of batched forward evaluations gives without a gradient call.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction as F
from typing import Sequence

import numpy as np

from .core import ConfigurationError, CountingObjective, NumericalError

VALID_POINTS = (0, 2, 4, 6, 8)

# central first-derivative weights, offsets -k..-1, +1..+k
CENTRAL_COEFFS: dict[int, tuple[F, ...]] = {
    2: (F(-1, 2), F(1, 2)),
    4: (F(1, 12), F(-2, 3), F(2, 3), F(-1, 12)),
    6: (F(-1, 60), F(3, 20), F(-3, 4), F(3, 4), F(-3, 20), F(1, 60)),
    8: (F(1, 280), F(-4, 105), F(1, 5), F(-4, 5), F(4, 5), F(-1, 5), F(4, 105), F(-1, 280)),
}


def central_offsets(points: int) -> tuple[int, ...]:
    k = points // 2
    return tuple(range(-k, 0)) + tuple(range(1, k + 1))


def default_coeffs(points: int) -> tuple[float, ...]:
    return tuple(float(c) for c in CENTRAL_COEFFS[points])


def default_h(x: np.ndarray) -> float:
    return 1e-7 * (1.0 + float(np.linalg.norm(x)))


@dataclass(frozen=True)
class FdScheme:
    """Stencil size, step ``h`` and weights.

    ``h=None`` means ``1e-7 * (1 + |x|)`` at each evaluation.  With
    ``one_sided=True`` and ``points=2`` the stencil is ``(x, x + h p)`` with
    weights ``(-1, 1)``, the plain forward difference.
    """

    points: int = 4
    h: float | None = None
    coeffs: tuple[float, ...] | None = None
    one_sided: bool = False
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.points not in VALID_POINTS:
            raise ConfigurationError(f"FD point count must be one of {VALID_POINTS}, got {self.points}")
        if self.h is not None and not self.h > 0:
            raise ConfigurationError("FD step h must be positive")
        if self.one_sided and self.points != 2:
            raise ConfigurationError("one-sided scheme uses exactly 2 points")
        offsets = (0, 1) if self.one_sided else central_offsets(self.points)
        object.__setattr__(self, "offsets", offsets)
        if self.coeffs is None and self.points:
            c = (-1.0, 1.0) if self.one_sided else default_coeffs(self.points)
            object.__setattr__(self, "coeffs", c)
        elif self.coeffs is not None:
            if len(self.coeffs) != self.points:
                raise ConfigurationError(
                    f"{self.points}-point scheme needs {self.points} coefficients, got {len(self.coeffs)}")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def enabled(self) -> bool:
        return self.points > 0

    def step(self, x: np.ndarray) -> float:
        return default_h(x) if self.h is None else self.h


def set_coeffs(scheme: FdScheme, coeffs: Sequence[float]) -> FdScheme:
    """Return a copy of ``scheme`` with user weights; only the length is checked."""
    if len(coeffs) != scheme.points:
        raise ConfigurationError(
            f"{scheme.points}-point scheme needs {scheme.points} coefficients, got {len(coeffs)}")
    return replace(scheme, coeffs=tuple(float(c) for c in coeffs))


def fd_points(x, p, h: float, count: int) -> list[np.ndarray]:
    """Stencil points ``x + k h p`` for ``k = -count/2 .. -1, 1 .. count/2``."""
    if count not in (2, 4, 6, 8):
        raise ConfigurationError(f"stencil count must be 2, 4, 6 or 8, got {count}")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return [x + (k * h) * p for k in central_offsets(count)]


def stencil(scheme: FdScheme, x: np.ndarray, p: np.ndarray) -> tuple[np.ndarray, float]:
    h = scheme.step(x)
    X = np.array([x + (k * h) * p for k in scheme.offsets])
    return X, h


def combine(scheme: FdScheme, values: np.ndarray, h: float) -> float:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite value on the FD stencil")
    return float(np.dot(scheme.coeffs, values) / h)


def directional_derivative(objective: CountingObjective, x, p, scheme: FdScheme,
                           width: int | None = None) -> float:
    """``sum_i c_i f(x + o_i h p) / h`` using ``ceil(points / width)`` forward batches.

    ``width`` defaults to the objective's batch width; with the usual
    ``points <= width`` this is exactly one forward call.
    """
    if not scheme.enabled:
        raise ConfigurationError("FD scheme is disabled (points=0)")
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    X, h = stencil(scheme, x, p)
    w = width or objective.width
    values = np.concatenate([objective.eval_batch(X[i:i + w]) for i in range(0, len(X), w)])
    return combine(scheme, values, h)
