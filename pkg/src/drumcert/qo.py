"""Numerical audits of boundary-trace identities and quasi-orthogonality on the unit disk."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .basis import DiskMode, disk_spectrum
from .geometry import BoundaryQuadrature, build_domain, build_quadrature

UNIT_DISK_S = 0.5
DISK_C_HT = 4.0


def slack_for(E_i: float, E_j: float) -> float:
    return 1e-8 * max(E_i, E_j)


def disk_quadrature(modes) -> BoundaryQuadrature:
    """Unit-circle quadrature with 8 points per angular oscillation plus 64."""
    m_max = max((md.m for md in modes), default=0)
    return build_quadrature(build_domain("disk"), 8 * m_max + 64)


def trace_matrix(modes, q: BoundaryQuadrature) -> np.ndarray:
    """Columns psi_j at the quadrature angles."""
    return np.column_stack([md.boundary_trace(q.thetas) for md in modes])


def mps_boundary_trace(q: BoundaryQuadrature, basis, coeffs) -> np.ndarray:
    """Normal derivative of u = sum c_n b_n at the quadrature nodes."""
    _, gx, gy = basis.evaluate(q.nodes)
    return (gx @ coeffs) * q.normals[:, 0] + (gy @ coeffs) * q.normals[:, 1]


@dataclass(frozen=True)
class BoundaryGram:
    window: tuple
    modes: tuple
    gram_plain: np.ndarray
    gram_weighted: np.ndarray
    op_norm_plain: float

    @property
    def labels(self) -> list[str]:
        return [md.label for md in self.modes]


def boundary_gram(modes, q: BoundaryQuadrature | None = None, window=(None, None)) -> BoundaryGram:
    """Gram of psi_j in L2(boundary), and of (x.n) psi_j in the (x.n)^{-1}-weighted product."""
    modes = tuple(modes)
    if not modes:
        return BoundaryGram(window, modes, np.zeros((0, 0)), np.zeros((0, 0)), 0.0)
    q = q or disk_quadrature(modes)
    Psi = trace_matrix(modes, q)
    plain = Psi.T @ (q.weights[:, None] * Psi)
    weighted = Psi.T @ ((q.weights * q.xdotn)[:, None] * Psi)
    plain = 0.5 * (plain + plain.T)
    weighted = 0.5 * (weighted + weighted.T)
    op = float(np.linalg.eigvalsh(plain)[-1])
    return BoundaryGram(window, modes, plain, weighted, op)


def window_modes(E: float, half_width: float, spectrum=None) -> list[DiskMode]:
    spectrum = spectrum if spectrum is not None else disk_spectrum(E + half_width + 1.0)
    return [md for md in spectrum if abs(md.E - E) <= half_width]


@dataclass(frozen=True)
class CheckRecord:
    check: str
    lhs: float
    rhs: float
    passed: bool
    detail: dict

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def as_json(self) -> str:
        rec = {"check": self.check, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "pass": self.passed}
        rec.update(self.detail)
        return json.dumps(rec, sort_keys=True)


def rellich_check(mode, q: BoundaryQuadrature) -> float:
    """|oint (x.n) psi^2 ds - 2E|.

    ``mode`` is a DiskMode (traces evaluated on q) or a pair (E, psi samples at the nodes of q).
    """
    if isinstance(mode, DiskMode):
        E, psi = mode.E, mode.boundary_trace(q.thetas)
    else:
        E, psi = mode
        psi = np.asarray(psi, dtype=float)
    return abs(float(np.sum(q.weights * q.xdotn * psi * psi)) - 2.0 * E)


def pairwise_qo_check(mode_i: DiskMode, mode_j: DiskMode, q: BoundaryQuadrature | None = None,
                      S: float = UNIT_DISK_S) -> CheckRecord:
    """|oint (x.n) psi_i psi_j - 2 E_i delta_ij| <= S^2 (E_i - E_j)^2 (plus quadrature slack)."""
    q = q or disk_quadrature([mode_i, mode_j])
    pi, pj = mode_i.boundary_trace(q.thetas), mode_j.boundary_trace(q.thetas)
    same = mode_i.label == mode_j.label
    lhs = abs(float(np.sum(q.weights * q.xdotn * pi * pj)) - (2.0 * mode_i.E if same else 0.0))
    rhs = S * S * (mode_i.E - mode_j.E) ** 2
    slack = slack_for(mode_i.E, mode_j.E)
    return CheckRecord("pairwise", lhs, rhs, lhs <= rhs + slack,
                       {"i": mode_i.label, "j": mode_j.label, "E_i": mode_i.E, "E_j": mode_j.E, "slack": slack})


@dataclass(frozen=True)
class PairwiseAudit:
    n_modes: int
    n_pairs: int
    violations: list
    worst_ratio: float
    max_diag_deviation: float


def pairwise_audit(E_max: float, S: float = UNIT_DISK_S) -> PairwiseAudit:
    """Every ordered pair with E_i, E_j <= E_max, from one weighted Gram."""
    modes = disk_spectrum(E_max)
    g = boundary_gram(modes)
    Ev = np.array([md.E for md in modes])
    lhs = np.abs(g.gram_weighted - np.diag(2.0 * Ev))
    rhs = S * S * (Ev[:, None] - Ev[None, :]) ** 2
    slack = 1e-8 * np.maximum(Ev[:, None], Ev[None, :])
    bad = np.argwhere(lhs > rhs + slack)
    viol = [(modes[i].label, modes[j].label, float(lhs[i, j]), float(rhs[i, j])) for i, j in bad]
    off = ~np.eye(len(modes), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(off & (rhs > 0), lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    return PairwiseAudit(len(modes), len(modes) ** 2, viol, float(ratio.max()),
                         float(np.max(np.diag(lhs))))


def window_qo_check(E: float, c: float = 1.0, spectrum=None) -> tuple[float, float, BoundaryGram]:
    """Largest eigenvalue of the plain Gram over |E_j - E| <= c sqrt(E), and its ratio to E."""
    hw = c * math.sqrt(E)
    modes = window_modes(E, hw, spectrum)
    g = boundary_gram(modes, window=(E, hw))
    return g.op_norm_plain, g.op_norm_plain / E, g


def weyl_check(E_max: float, area: float = math.pi) -> list[tuple[float, int, float, float]]:
    """(E, N(E), E area / 4 pi, remainder) at both sides of every eigenvalue up to E_max."""
    Ev = np.array([md.E for md in disk_spectrum(E_max)])
    rows = []
    for E in np.unique(Ev):
        for side in (np.nextafter(E, -np.inf), np.nextafter(E, np.inf)):
            n = int(np.count_nonzero(Ev < side))
            main = side * area / (4.0 * math.pi)
            rows.append((float(side), n, float(main), float(n - main)))
    n = int(np.count_nonzero(Ev < E_max))
    rows.append((float(E_max), n, E_max * area / (4 * math.pi), n - E_max * area / (4 * math.pi)))
    return rows


def quasimode_bound_check(modes, coeffs, q: BoundaryQuadrature | None = None,
                          c_ht: float = DISK_C_HT, slack: float = 1.1) -> CheckRecord:
    """||sum c_j psi_j||^2 <= c_ht E slack, with E the largest window eigenvalue."""
    modes = list(modes)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(modes),):
        raise ValueError("one coefficient per mode required")
    q = q or disk_quadrature(modes)
    f = trace_matrix(modes, q) @ coeffs
    lhs = float(np.sum(q.weights * f * f))
    E = max(md.E for md in modes)
    bound = c_ht * E * slack
    return CheckRecord("quasimode", lhs, bound, lhs <= bound,
                       {"E": E, "norm_c": float(np.linalg.norm(coeffs))})


def write_jsonl(records, fh) -> None:
    for rec in records:
        fh.write(rec.as_json() + "\n")
