"""Boundary and interior norm matrices for a trial basis, and the regularized subspace.

The interior Gram uses the Rellich-type identity, valid for any u with
(Delta + E) u = 0:

    E * int_Omega u^2 = oint (x.grad u) d_n u - (x.n)|grad u|^2 / 2 + E (x.n) u^2 / 2 ds

so only boundary samples of u and grad u are needed.  On functions with zero
boundary values this reduces to the Gram of Q.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch, RankZero
from .geometry import BoundaryQuadrature, RadialDomain, interior_grid

DEFAULT_THRESHOLD = 1e-14


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class AssembledSystem:
    E: float
    P: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    Q: np.ndarray
    F: np.ndarray
    G: np.ndarray
    xdotn: np.ndarray
    nodes: np.ndarray
    normals: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    @property
    def Ps(self) -> np.ndarray:
        """Boundary-value matrix in the (x.n)^{-1}-weighted norm."""
        return self.P / np.sqrt(self.xdotn)[:, None]

    def restricted_gram(self, W: np.ndarray) -> np.ndarray:
        """W^T G W, formed from the projected blocks to avoid amplifying rounding in G."""
        return interior_gram(self.E, self.P @ W, self.P1 @ W, self.P2 @ W, self.nodes, self.normals, self.xdotn)


def assemble(d: RadialDomain, q: BoundaryQuadrature, b) -> AssembledSystem:
    """Build P, P1, P2, Q, F and G for basis ``b`` on quadrature ``q``."""
    M = q.M
    for name, arr in (("nodes", q.nodes), ("normals", q.normals)):
        if arr.shape != (M, 2):
            raise DimensionMismatch(f"quadrature {name} have shape {arr.shape}, expected ({M}, 2)")
    for name, arr in (("weights", q.weights), ("xdotn", q.xdotn)):
        if arr.shape != (M,):
            raise DimensionMismatch(f"quadrature {name} have shape {arr.shape}, expected ({M},)")
    rad = np.hypot(q.nodes[:, 0], q.nodes[:, 1])
    if not np.allclose(rad, np.real(d.r(q.thetas)), rtol=1e-10, atol=0):
        raise ConfigError("quadrature nodes do not lie on the boundary of the given domain")

    E = float(b.E)
    V, Vx, Vy = b.evaluate(q.nodes)
    if V.shape[0] != M:
        raise DimensionMismatch("basis evaluation returned the wrong number of rows")
    sw = np.sqrt(q.weights)[:, None]
    P, P1, P2 = sw * V, sw * Vx, sw * Vy
    Q = normal_matrix(E, P1, P2, q.normals, q.xdotn)
    G = interior_gram(E, P, P1, P2, q.nodes, q.normals, q.xdotn)
    return AssembledSystem(E, P, P1, P2, Q, _sym(P.T @ P), G, q.xdotn.copy(), q.nodes.copy(), q.normals.copy())


def normal_matrix(E, P1, P2, normals, xdotn) -> np.ndarray:
    """Q = sqrt(x.n / 2E) * sqrt(w) * d_n xi."""
    Dn = normals[:, :1] * P1 + normals[:, 1:] * P2
    return np.sqrt(xdotn[:, None] / (2.0 * E)) * Dn


def interior_gram(E, P, P1, P2, nodes, normals, xdotn) -> np.ndarray:
    """Interior L2 Gram of the columns from their weighted boundary samples."""
    X = xdotn[:, None]
    Dn = normals[:, :1] * P1 + normals[:, 1:] * P2
    Dx = nodes[:, :1] * P1 + nodes[:, 1:] * P2
    G = _sym(Dx.T @ Dn) - 0.5 * (P1.T @ (X * P1) + P2.T @ (X * P2)) + 0.5 * E * (P.T @ (X * P))
    return _sym(G / E)


@dataclass(frozen=True)
class RegularizedSubspace:
    basis_matrix: np.ndarray
    rank: int
    threshold: float
    singular_values: np.ndarray

    @property
    def coeff_map(self) -> np.ndarray:
        """V_r / s_r: maps subspace coordinates to coefficients with [P;P1;P2] W orthonormal."""
        return self.basis_matrix / self.singular_values[None, :]


def regularize(sys: AssembledSystem, threshold: float = DEFAULT_THRESHOLD) -> RegularizedSubspace:
    """Keep right singular vectors of [P; P1; P2] with s >= threshold * s_max."""
    if not 0 < threshold < 1:
        raise ConfigError("threshold must lie in (0, 1)")
    A = np.vstack([sys.P, sys.P1, sys.P2])
    _, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or not s[0] > 0:
        raise RankZero("stacked boundary matrix is zero")
    keep = s >= threshold * s[0]
    R = int(np.count_nonzero(keep))
    if R == 0:
        raise RankZero("no singular values above threshold")
    return RegularizedSubspace(Vt[:R].T.copy(), R, float(threshold), s[:R].copy())


def interior_gram_grid(d: RadialDomain, b, h: float) -> np.ndarray:
    """Midpoint-rule interior Gram on a square grid: a validation oracle for G."""
    pts, inside = interior_grid(d, h)
    V = b.evaluate(pts[inside])[0]
    return h * h * (V.T @ V)


_MAGIC = b"DRUMMAT1"
_ORDER = ("P", "P1", "P2", "Q", "F", "G")


def dump_system(sys: AssembledSystem, path) -> None:
    """Little-endian float64, row-major, after a header (magic, M, N, E).

    Body order: x.n, nodes, normals, then P, P1, P2, Q, F, G.
    """
    M, N = sys.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qqd", M, N, sys.E))
        for vec in (sys.xdotn, sys.nodes, sys.normals):
            fh.write(np.ascontiguousarray(vec, dtype="<f8").tobytes())
        for name in _ORDER:
            fh.write(np.ascontiguousarray(getattr(sys, name), dtype="<f8").tobytes())


def load_system(path) -> AssembledSystem:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _MAGIC:
        raise ConfigError("not a matrix dump")
    M, N, E = struct.unpack_from("<qqd", raw, 8)
    off = 8 + struct.calcsize("<qqd")
    sizes = [M, 2 * M, 2 * M] + [M * N] * 4 + [N * N] * 2
    need = off + 8 * sum(sizes)
    if len(raw) != need:
        raise DimensionMismatch(f"dump has {len(raw)} bytes, header implies {need}")
    arrays = []
    for n in sizes:
        arrays.append(np.frombuffer(raw, dtype="<f8", count=n, offset=off).astype(float))
        off += 8 * n
    xdotn, nodes, normals = arrays[0], arrays[1].reshape(M, 2), arrays[2].reshape(M, 2)
    mats = {name: a.reshape((M, N) if i < 4 else (N, N)) for i, (name, a) in enumerate(zip(_ORDER, arrays[3:]))}
    return AssembledSystem(E=E, xdotn=xdotn, nodes=nodes, normals=normals, **mats)
