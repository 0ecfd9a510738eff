"""Bessel functions J_m, Y_0 and zeros of J_nu.

Values come from scipy.special (Amos/Cephes); zeros are located here so that
non-integer orders and arbitrary counts are available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError


def bessel_j(m: float, x):
    """Return (J_m(x), J_m'(x)) for real order m >= 0 and x >= 0."""
    if m < 0:
        raise DomainError("order must be nonnegative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("argument must be nonnegative")
    return special.jv(m, x), special.jvp(m, x)


def bessel_y0(x):
    """Return (Y_0(x), Y_0'(x)) for x > 0; Y_0' = -Y_1."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("Y_0 requires x > 0")
    return special.y0(x), -special.y1(x)


@dataclass(frozen=True)
class BesselZeroTable:
    order: float
    zeros: np.ndarray

    def __len__(self) -> int:
        return len(self.zeros)

    def __getitem__(self, k):
        return self.zeros[k]


def _refine_zero(nu: float, a: float, b: float, guess: float) -> float:
    """Newton from ``guess`` kept inside the sign-change bracket [a, b]."""
    fa = special.jv(nu, a)
    x = guess if a < guess < b else 0.5 * (a + b)
    for _ in range(100):
        fx = special.jv(nu, x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b = x
        step = fx / special.jvp(nu, x)
        xn = x - step
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) <= 4e-16 * abs(x) or b - a <= 4e-16 * b:
            return xn
        x = xn
    return x


def _mcmahon(nu: float, k: int) -> float:
    beta = (k + nu / 2.0 - 0.25) * np.pi
    mu = 4.0 * nu * nu
    return beta - (mu - 1.0) / (8.0 * beta)


def _scan_zeros(m: float, count: int | None, x_max: float | None) -> list[float]:
    step = 0.5
    zeros: list[float] = []
    # j_{nu,1} > nu, so a sign scan starting at nu (or a small positive x) cannot miss roots
    a = max(float(m), 1e-3)
    fa = special.jv(m, a)
    while True:
        if count is not None and len(zeros) >= count:
            break
        if x_max is not None and a > x_max:
            break
        b = a + step
        fb = special.jv(m, b)
        if fa == 0.0:
            zeros.append(a)
        elif np.sign(fa) != np.sign(fb):
            guess = _mcmahon(m, len(zeros) + 1)
            zeros.append(_refine_zero(m, a, b, guess))
        a, fa = b, fb
    if count is not None:
        zeros = zeros[:count]
    if x_max is not None:
        zeros = [z for z in zeros if z <= x_max]
    return zeros


def bessel_zeros(m: float, count: int) -> BesselZeroTable:
    """First ``count`` positive zeros of J_m, ascending."""
    if count < 1:
        raise DomainError("count must be at least 1")
    if m < 0:
        raise DomainError("order must be nonnegative")
    return BesselZeroTable(float(m), np.array(_scan_zeros(m, count, None)))


def bessel_zeros_below(m: float, x_max: float) -> BesselZeroTable:
    """All positive zeros of J_m not exceeding ``x_max`` (possibly none)."""
    if m < 0:
        raise DomainError("order must be nonnegative")
    return BesselZeroTable(float(m), np.array(_scan_zeros(m, None, float(x_max))))
