"""Helmholtz trial bases.

``MFSBasis`` holds fundamental solutions Y_0(sqrt(E)|x - y_n|) whose charge
points sit on the complex-shifted boundary curve.  ``DiskMode`` is a closed-form
Dirichlet eigenfunction of the unit disk, and ``ModeBasis`` wraps a list of them
so they can be fed through the same assembly path as an MFS basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ChargePointInside, CoincidentPoint, ConfigError, ContinuationFailure
from .geometry import TWO_PI, RadialDomain
from .specfun import bessel_zeros, bessel_zeros_below

# imaginary shift of the charge-point parameter, in radians
DEFAULT_DELTA = TWO_PI * 0.025


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p.reshape(1, 2)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ConfigError("points must have shape (n, 2)")
    return p


@dataclass(frozen=True)
class MFSBasis:
    E: float
    charge_points: np.ndarray
    delta: float = DEFAULT_DELTA

    @property
    def N(self) -> int:
        return len(self.charge_points)

    def with_energy(self, E: float) -> "MFSBasis":
        if not E > 0:
            raise ConfigError("energy must be positive")
        return MFSBasis(float(E), self.charge_points, self.delta)

    def evaluate(self, points):
        """Values and Cartesian derivatives, each of shape (len(points), N)."""
        p = _as_points(points)
        diff = p[:, None, :] - self.charge_points[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        if np.any(dist <= 1e-14 * max(1.0, float(np.max(np.abs(self.charge_points))))):
            raise CoincidentPoint("evaluation point coincides with a charge point")
        k = np.sqrt(self.E)
        kd = k * dist
        val = special.y0(kd)
        g = -k * special.y1(kd) / dist
        return val, g * diff[..., 0], g * diff[..., 1]


def _continue_boundary(d: RadialDomain, theta_c: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(all="raise"):
            r = np.asarray(d.r(theta_c))
    except (TypeError, ValueError, FloatingPointError) as exc:
        raise ContinuationFailure(f"radial function cannot be evaluated at complex angles: {exc}")
    if not np.iscomplexobj(r) and np.any(np.imag(theta_c) != 0):
        raise ContinuationFailure("radial function discarded the imaginary part of its argument")
    if r.shape != theta_c.shape or not np.all(np.isfinite(r)):
        raise ContinuationFailure("radial function continuation is not finite")
    return r * np.exp(1j * theta_c)


def build_mfs(d: RadialDomain, E: float, N: int, delta: float = DEFAULT_DELTA) -> MFSBasis:
    """Charge points y_n = x(2 pi n / N - i delta), n = 1..N."""
    if not E > 0:
        raise ConfigError("energy must be positive")
    if int(N) < 1:
        raise ConfigError("basis size must be at least 1")
    if not delta > 0:
        raise ChargePointInside("delta must be positive; delta = 0 puts charges on the boundary")
    N = int(N)
    theta = TWO_PI * np.arange(1, N + 1) / N - 1j * delta
    z = _continue_boundary(d, theta)
    ang = np.angle(z)
    outside = np.abs(z) > np.real(d.r(ang)) * (1.0 + 1e-12)
    if not np.all(outside):
        bad = int(np.count_nonzero(~outside))
        raise ChargePointInside(f"{bad} of {N} charge points lie inside the closed domain")
    if N >= 3:
        steps = np.diff(np.unwrap(np.append(ang, ang[0])))
        if np.any(steps <= 0):
            raise ContinuationFailure("continued charge curve is not monotone in angle (self-intersecting)")
    return MFSBasis(float(E), np.column_stack([z.real, z.imag]), float(delta))


@lru_cache(maxsize=None)
def _zero(m: int, k: int) -> float:
    return float(bessel_zeros(m, k).zeros[-1])


@dataclass(frozen=True)
class DiskMode:
    m: int
    k: int
    parity: str
    E: float
    norm_const: float

    @property
    def j(self) -> float:
        return float(np.sqrt(self.E))

    @property
    def label(self) -> str:
        return f"m{self.m}k{self.k}{self.parity}"

    def _ang(self, theta):
        if self.parity == "cos":
            return np.cos(self.m * theta), -self.m * np.sin(self.m * theta)
        return np.sin(self.m * theta), self.m * np.cos(self.m * theta)

    def evaluate(self, points):
        """Values and Cartesian derivatives at (n, 2) points."""
        p = _as_points(points)
        r = np.hypot(p[:, 0], p[:, 1])
        th = np.arctan2(p[:, 1], p[:, 0])
        j, m, c = self.j, self.m, self.norm_const
        a, da = self._ang(th)
        val = c * special.jv(m, j * r) * a
        dr = c * j * special.jvp(m, j * r) * a
        if m == 0:
            over_r = np.zeros_like(r)
        else:
            # J_m(jr)/r written without the removable singularity at r = 0
            over_r = c * j * (special.jv(m - 1, j * r) + special.jv(m + 1, j * r)) / (2 * m)
        dth = over_r * da
        ct, st = np.cos(th), np.sin(th)
        return val, dr * ct - dth * st, dr * st + dth * ct

    def value(self, points) -> np.ndarray:
        return self.evaluate(points)[0]

    def boundary_trace(self, theta) -> np.ndarray:
        """psi(theta) = normal derivative on the unit circle."""
        a, _ = self._ang(np.asarray(theta, dtype=float))
        return self.norm_const * self.j * special.jvp(self.m, self.j) * a


def disk_mode(m: int, k: int, parity: str = "cos") -> DiskMode:
    if m < 0 or k < 1:
        raise ConfigError("need m >= 0 and k >= 1")
    if parity not in ("cos", "sin"):
        raise ConfigError("parity must be 'cos' or 'sin'")
    if m == 0 and parity == "sin":
        raise ConfigError("m = 0 has only the cos parity")
    return _make_mode(m, k, parity, _zero(m, k))


def _make_mode(m: int, k: int, parity: str, j: float) -> DiskMode:
    ang = TWO_PI if m == 0 else np.pi
    norm = 1.0 / np.sqrt(ang * special.jv(m + 1, j) ** 2 / 2.0)
    return DiskMode(m, k, parity, j * j, float(norm))


def disk_spectrum(E_max: float) -> list[DiskMode]:
    """All unit-disk modes with E <= E_max, ascending, cos/sin twins listed separately."""
    j01 = _zero(0, 1)
    if not E_max > j01 * j01:
        raise ConfigError("E_max must exceed the lowest disk eigenvalue")
    x_max = np.sqrt(E_max)
    modes: list[DiskMode] = []
    m = 0
    while m < x_max:
        zs = bessel_zeros_below(m, x_max).zeros
        if zs.size == 0:
            break
        for k, j in enumerate(zs, start=1):
            modes.append(_make_mode(m, k, "cos", float(j)))
            if m > 0:
                modes.append(_make_mode(m, k, "sin", float(j)))
        m += 1
    modes.sort(key=lambda md: (md.E, md.m, md.parity))
    return modes


@dataclass(frozen=True)
class ModeBasis:
    """A fixed list of closed-form modes used as basis columns (energy is nominal)."""

    modes: tuple
    E: float

    @property
    def N(self) -> int:
        return len(self.modes)

    def with_energy(self, E: float) -> "ModeBasis":
        return ModeBasis(self.modes, float(E))

    def evaluate(self, points):
        cols = [md.evaluate(points) for md in self.modes]
        return tuple(np.column_stack([c[i] for c in cols]) for i in range(3))


def mode_basis(modes, E: float | None = None) -> ModeBasis:
    modes = tuple(modes)
    if not modes:
        raise ConfigError("need at least one mode")
    return ModeBasis(modes, float(modes[0].E if E is None else E))


def eval_basis(b, points):
    """(values, d/dx1, d/dx2) matrices of shape (len(points), N)."""
    return b.evaluate(points)
