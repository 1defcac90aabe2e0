"""Least-squares polynomial fits and real roots for the polyfit line search."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

TRIM_RTOL = 1e-12
IMAG_TOL = 1e-8
RANK_RTOL = 1e-12


class SingularFitError(np.linalg.LinAlgError):
    """The Vandermonde system is rank deficient (repeated abscissae)."""


@dataclass(frozen=True)
class Polynomial:
    """Coefficients in ascending degree: ``c[0] + c[1] a + ... + c[d] a**d``."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) == 0:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, a):
        # Horner, highest coefficient first
        out = np.zeros_like(np.asarray(a, dtype=float))
        for c in reversed(self.coefficients):
            out = out * a + c
        return out if np.ndim(out) else float(out)

    def derivative(self) -> "Polynomial":
        c = self.coefficients
        if len(c) == 1:
            return Polynomial((0.0,))
        return Polynomial(tuple(k * c[k] for k in range(1, len(c))))


def polyfit_fit(alphas: Sequence[float], values: Sequence[float], order: int) -> Polynomial:
    """Least-squares fit of degree ``order`` via Householder QR of the Vandermonde matrix.

    The abscissae are mapped affinely onto [-1, 1] before factorising (the
    raw Vandermonde matrix on a grid like [1/4, 2] has condition ~1e6 at
    degree 7) and the coefficients are mapped back to the original variable.

    Raises :class:`SingularFitError` when fewer than ``order + 1`` distinct
    abscissae are given or the triangular factor is numerically singular.
    """
    a = np.asarray(alphas, dtype=float)
    y = np.asarray(values, dtype=float)
    if a.ndim != 1 or a.shape != y.shape:
        raise ValueError("alphas and values must be 1-D and of equal length")
    if order < 0:
        raise ValueError("order must be non-negative")
    if np.unique(a).size < order + 1:
        raise SingularFitError(f"need {order + 1} distinct abscissae, got {np.unique(a).size}")
    center = 0.5 * (a.max() + a.min())
    half = 0.5 * (a.max() - a.min()) or 1.0
    A = np.vander((a - center) / half, order + 1, increasing=True)
    Q, R = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.min() <= RANK_RTOL * max(diag.max(), 1.0):
        raise SingularFitError("rank-deficient Vandermonde system")
    b = np.linalg.solve(R, Q.T @ y)
    # Horner in t = (a - center) / half, expanded into powers of a
    linear = np.array([-center / half, 1.0 / half])
    coef = np.array([b[-1]])
    for bk in b[-2::-1]:
        coef = P.polyadd(P.polymul(coef, linear), [bk])
    coef = np.pad(coef, (0, order + 1 - coef.size))
    return Polynomial(tuple(coef))


def _trim(c: Sequence[float]) -> list[float]:
    c = list(c)
    scale = max(abs(v) for v in c)
    if scale == 0.0:
        raise ValueError("zero polynomial has no well-defined roots")
    while len(c) > 1 and abs(c[-1]) <= TRIM_RTOL * scale:
        c.pop()
    return c


def _is_real(z: complex) -> bool:
    return abs(z.imag) <= IMAG_TOL * (1.0 + abs(z.real))


def _polish(poly: Polynomial, r: float, steps: int = 3) -> float:
    """Newton refinement of a companion-matrix root; keeps only improving steps."""
    dpoly = poly.derivative()
    best = abs(poly(r))
    for _ in range(steps):
        d = dpoly(r)
        if d == 0.0 or best == 0.0:
            break
        cand = r - poly(r) / d
        val = abs(poly(cand))
        if not val < best:
            break
        r, best = cand, val
    return r


def poly_real_roots(poly: Polynomial) -> list[float]:
    """All real roots in ascending order, repeated roots reported once."""
    c = _trim(poly.coefficients)
    d = len(c) - 1
    if d == 0:
        return []
    if d == 1:
        return [-c[0] / c[1]]
    if d == 2:
        c0, b, a = c
        disc = b * b - 4.0 * a * c0
        if disc < 0.0:
            z = complex(-b / (2.0 * a), math.sqrt(-disc) / (2.0 * abs(a)))
            return [z.real] if _is_real(z) else []
        if disc == 0.0:
            return [-b / (2.0 * a)]
        # stable form avoiding cancellation
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        roots = [q / a, c0 / q] if q != 0.0 else [0.0]
        return sorted(roots)
    # companion matrix of the monic polynomial
    monic = np.asarray(c[:-1]) / c[-1]
    C = np.zeros((d, d))
    C[1:, :-1] = np.eye(d - 1)
    C[:, -1] = -monic
    eig = np.linalg.eigvals(C)
    trimmed = Polynomial(tuple(c))
    real = sorted(_polish(trimmed, z.real) for z in eig if _is_real(complex(z)))
    out: list[float] = []
    for r in real:
        if out and abs(r - out[-1]) <= 1e-7 * (1.0 + abs(r)):
            continue
        out.append(r)
    return out


def select_alpha_min(poly: Polynomial, alpha: float) -> float | None:
    """Smallest positive local minimiser of ``poly`` if it lies in ``[alpha/4, 4*alpha]``.

    Local minimisers are real roots of the derivative with a positive second
    derivative.  Returns ``None`` when there is no such point or it falls
    outside the acceptance interval.
    """
    d1 = poly.derivative()
    if all(c == 0.0 for c in d1.coefficients):
        return None
    d2 = d1.derivative()
    minima = [r for r in poly_real_roots(d1) if r > 0.0 and d2(r) > 0.0]
    if not minima:
        return None
    a_min = minima[0]
    if 0.25 * alpha <= a_min <= 4.0 * alpha:
        return a_min
    return None
