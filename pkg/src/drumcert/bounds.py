"""Eigenvalue inclusion intervals and eigenfunction error bounds from tensions.

Every constant is built from the extrema of x.n (star-shaped multiplier field
a = x / inf(x.n)) and a certified lowest eigenvalue E_1.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, IndistinctNeighbor, NotConverged, NotStarShaped
from .geometry import GeomConstants, RadialDomain, geom_constants
from .specfun import bessel_zeros

J01 = float(bessel_zeros(0, 1).zeros[0])

KINDS = ("MolerPayne", "ThmB_allE", "ThmB_hf", "StarSharp", "StarFull")

FORMULAS = {
    "C_a": "sup(x.n) / inf(x.n)",
    "C_a_prime": "1 / inf(x.n)",
    "C_a_dblprime": "0 (star-shaped field)",
    "c_ht_allE": "4 (C_a + C_a') + sqrt(2) C_a''",
    "c_ht_hf": "2 (1 + sup(x.n)) / inf(x.n)",
    "C_allE": "sqrt(c_ht_allE (1 + 14 max(E_1, 4) E_1))",
    "C_hf": "sqrt(c_ht_hf)",
    "q1_lower": "sqrt(E_1_lower) inf(x.n) / (2 sup(x.n))",
    "C_MP": "q1_lower^(-1/2)",
    "C_d": "2 sqrt(E_1)",
}


@dataclass(frozen=True)
class BoundConstants:
    sup_xdotn: float
    inf_xdotn: float
    C_a: float
    C_a_prime: float
    C_a_dblprime: float
    c_ht_allE: float
    c_ht_hf: float
    C_allE: float
    C_hf: float
    C_MP: float
    q1_lower: float
    E_1: float
    E_1_radius: float
    C_d: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_constants(g: GeomConstants, E_1: float, E_1_radius: float = 0.0,
                      E_1_lower: float | None = None) -> BoundConstants:
    """All bound constants for a strictly star-shaped domain.

    The Moler-Payne constant uses a lower bound for E_1 (``E_1 - E_1_radius``
    unless ``E_1_lower`` is given), since a smaller E_1 gives a larger constant.
    """
    if not g.inf_xdotn > 0:
        raise NotStarShaped("inf(x.n) must be positive")
    if not E_1 > 0:
        raise ConfigError("E_1 must be positive")
    sup, inf = g.sup_xdotn, g.inf_xdotn
    C_a = sup / inf
    C_a1 = 1.0 / inf
    C_a2 = 0.0
    c_all = 4.0 * (C_a + C_a1) + math.sqrt(2.0) * C_a2
    c_hf = 2.0 * (1.0 + sup) / inf
    lower = E_1_lower if E_1_lower is not None else E_1 - E_1_radius
    if not lower > 0:
        raise ConfigError("lower bound on E_1 must be positive")
    q1 = math.sqrt(lower) * inf / (2.0 * sup)
    return BoundConstants(
        sup_xdotn=sup, inf_xdotn=inf, C_a=C_a, C_a_prime=C_a1, C_a_dblprime=C_a2,
        c_ht_allE=c_all, c_ht_hf=c_hf,
        C_allE=math.sqrt(c_all * (1.0 + 14.0 * max(E_1, 4.0) * E_1)),
        C_hf=math.sqrt(c_hf), C_MP=1.0 / math.sqrt(q1), q1_lower=q1,
        E_1=float(E_1), E_1_radius=float(E_1_radius), C_d=2.0 * math.sqrt(E_1),
    )


@dataclass(frozen=True)
class CertifiedInterval:
    E_center: float
    radius: float
    bound_kind: str
    tension: float
    tension_kind: str
    constant: float
    rigorous: bool
    note: str = ""
    constants: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def lo(self) -> float:
        return self.E_center - self.radius

    @property
    def hi(self) -> float:
        return self.E_center + self.radius

    def contains(self, E: float) -> bool:
        return self.lo <= E <= self.hi


@dataclass(frozen=True)
class RegimeFlags:
    """Guards for the high-frequency forms: E >= hf_min_E and tension * sqrt(E) < small_tension."""

    hf_min_E: float = 100.0
    small_tension: float = 1e-3
    c1: float | None = None
    c2: float | None = None


def _plan(E: float, t: float, t_s: float | None, k: BoundConstants, flags: RegimeFlags):
    """Yield (kind, radius, tension, tension_kind, constant, rigorous, note) or (kind, None, reason)."""
    sE = math.sqrt(E)
    yield ("MolerPayne", k.C_MP * E * t, t, "t", k.C_MP, True, "C_MP E t")
    if not E > 1:
        reason = "these constants need E > 1"
        for kind in ("ThmB_allE", "ThmB_hf", "StarSharp", "StarFull"):
            yield (kind, None, reason)
        return
    yield ("ThmB_allE", k.C_allE * sE * t, t, "t", k.C_allE, True, "C_allE sqrt(E) t")
    if E >= flags.hf_min_E and t * sE < flags.small_tension:
        yield ("ThmB_hf", k.C_hf * sE * t, t, "t", k.C_hf, False,
               "C_hf sqrt(E) t; high-frequency small-tension form")
    else:
        yield ("ThmB_hf", None, f"needs E >= {flags.hf_min_E:g} and t sqrt(E) < {flags.small_tension:g}")
    if t_s is None:
        yield ("StarSharp", None, "no weighted tension supplied")
    elif E >= flags.hf_min_E and t_s * sE < flags.small_tension:
        yield ("StarSharp", math.sqrt(2.0 * E) * t_s, t_s, "t_s", math.sqrt(2.0), False,
               "sqrt(2E) t_s; small-tension limit")
    else:
        yield ("StarSharp", None, f"needs E >= {flags.hf_min_E:g} and t_s sqrt(E) < {flags.small_tension:g}")
    if t_s is None or flags.c1 is None or flags.c2 is None:
        yield ("StarFull", None, "diagnostic only; needs user-supplied c1, c2")
    elif flags.c2 * t_s * t_s >= 1.0:
        yield ("StarFull", None, "requires c2 t_s^2 < 1")
    else:
        F = E + sE
        r = math.sqrt(2.0 * F) * t_s * (1.0 + flags.c1 * math.sqrt(F) * t_s) / (1.0 - flags.c2 * t_s * t_s)
        yield ("StarFull", r, t_s, "t_s", math.sqrt(2.0), False,
               f"sqrt(2F) t_s (1 + c1 sqrt(F) t_s)/(1 - c2 t_s^2), F = E + sqrt(E), c1={flags.c1:g}, c2={flags.c2:g}")


def certify(E: float, t: float, t_s: float | None, k: BoundConstants,
            flags: RegimeFlags | None = None, rigorous_only: bool = False) -> list[CertifiedInterval]:
    """One interval per applicable bound kind; inapplicable kinds are omitted."""
    if not E > 0 or t < 0 or (t_s is not None and t_s < 0):
        raise ConfigError("need E > 0 and nonnegative tensions")
    flags = flags or RegimeFlags()
    snap = k.as_dict()
    out = []
    for item in _plan(E, t, t_s, k, flags):
        if item[1] is None:
            continue
        kind, radius, tension, tkind, const, rig, note = item
        if rigorous_only and not rig:
            continue
        out.append(CertifiedInterval(float(E), float(radius), kind, float(tension), tkind,
                                     float(const), rig, note, snap))
    return out


def omitted_kinds(E: float, t: float, t_s: float | None, k: BoundConstants,
                  flags: RegimeFlags | None = None) -> dict[str, str]:
    return {item[0]: item[2] for item in _plan(E, t, t_s, k, flags or RegimeFlags()) if item[1] is None}


def tightest(intervals, rigorous_only: bool = False) -> CertifiedInterval | None:
    pool = [iv for iv in intervals if iv.rigorous or not rigorous_only]
    return min(pool, key=lambda iv: iv.radius) if pool else None


def lower_bound_distance(E: float, t_s: float, C_d: float) -> float:
    """sqrt(2 E') t_s with E' = E - C_d sqrt(E), clipped at 0."""
    if t_s < 0:
        raise ConfigError("t_s must be nonnegative")
    Ep = E - C_d * math.sqrt(E)
    return math.sqrt(2.0 * Ep) * t_s if Ep > 0 else 0.0


def distance_prior(E: float, E_1: float) -> float:
    """A priori cap 2 sqrt(E_1 E) on the distance from E to the spectrum."""
    if E < E_1:
        raise ConfigError("distance prior needs E >= E_1")
    return 2.0 * math.sqrt(E_1 * E)


@dataclass(frozen=True)
class EigenfunctionErrorBound:
    E: float
    E_k: float
    l2_error_bound: float
    baseline_MP: float
    constant: float
    constant_kind: str


def eigenfunction_error(E: float, t: float, E_k: float, k: BoundConstants, *,
                        radius: float | None = None, radius_k: float = 0.0,
                        flags: RegimeFlags | None = None) -> EigenfunctionErrorBound:
    """L2 distance to the eigenspace near E, given the nearest other eigenvalue E_k.

    Uses C_hf when the high-frequency guard holds, else C_allE.  Refuses when the
    certified intervals around E and E_k overlap.
    """
    flags = flags or RegimeFlags()
    if radius is None:
        radius = k.C_MP * E * t
    gap = abs(E - E_k)
    if not gap > radius + radius_k:
        raise IndistinctNeighbor(f"|E - E_k| = {gap:.3g} does not exceed the combined radii {radius + radius_k:.3g}")
    sE = math.sqrt(E)
    if E >= flags.hf_min_E and t * sE < flags.small_tension:
        C, kind = k.C_hf, "C_hf"
    else:
        C, kind = k.C_allE, "C_allE"
    return EigenfunctionErrorBound(float(E), float(E_k), C * sE * t / gap, k.C_MP * E * t / gap, C, kind)


@dataclass
class GroundState:
    E_1: float
    radius: float
    t: float
    E_lower_prior: float
    E_upper_prior: float
    record: object = None


def certify_ground_state(d: RadialDomain, config=None, n_scan: int = 80,
                         g: GeomConstants | None = None) -> GroundState:
    """Lowest eigenvalue from a scan of [Faber-Krahn, inscribed-ball] plus refinement.

    The Moler-Payne radius uses the Faber-Krahn value as the E_1 lower bound,
    which needs no prior knowledge of E_1.
    """
    from .solver import SolverConfig, find_minima, refine_minimum, scan

    cfg = config or SolverConfig(N=100, M=200)
    g = g or geom_constants(d)
    fk = math.pi * J01 * J01 / g.area
    ub = J01 * J01 / (g.r_min * g.r_min)
    lo, hi = 0.95 * fk, 1.05 * ub
    samples = scan(d, lo, hi, n_scan, cfg)
    cands = sorted(find_minima(samples), key=lambda c: c.E)
    if not cands:
        raise NotConverged("no tension minimum between the Faber-Krahn and inscribed-ball bounds")
    last = None
    for c in cands:
        try:
            rec = refine_minimum(d, c.E, cfg, h0=1e-3 * c.E)
        except NotConverged as exc:
            last = exc
            continue
        k = compute_constants(g, rec.E_star, E_1_lower=fk)
        return GroundState(rec.E_star, k.C_MP * rec.E_star * rec.t_star, rec.t_star, fk, ub, rec)
    raise NotConverged("ground-state refinement failed", getattr(last, "record", None))


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, (np.floating,)):
        return _clean(float(x))
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k_: _clean(v) for k_, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def certification_report(domain_spec, E: float, t: float, t_s: float | None, k: BoundConstants, *,
                         t_s_min: float | None = None, flags: RegimeFlags | None = None,
                         extra: dict | None = None) -> dict:
    """JSON-ready report: tensions, constants with formula tags, intervals and omissions."""
    flags = flags or RegimeFlags()
    ivs = certify(E, t, t_s, k, flags)
    best = tightest(ivs)
    best_rig = tightest(ivs, rigorous_only=True)
    rep = {
        "domain": domain_spec,
        "E": E,
        "t": t,
        "t_s": t_s,
        "t_s_min": t_s_min,
        "constants": {name: {"value": val, "formula": FORMULAS.get(name, "input")}
                      for name, val in k.as_dict().items()},
        "intervals": [
            {"bound_kind": iv.bound_kind, "E_center": iv.E_center, "radius": iv.radius,
             "lo": iv.lo, "hi": iv.hi, "tension": iv.tension, "tension_kind": iv.tension_kind,
             "constant": iv.constant, "rigorous": iv.rigorous, "note": iv.note,
             "tightest": iv is best, "tightest_rigorous": iv is best_rig}
            for iv in ivs
        ],
        "omitted": omitted_kinds(E, t, t_s, k, flags),
        "lower_bound_distance": {
            "value": lower_bound_distance(E, t_s_min if t_s_min is not None else (t_s or 0.0), k.C_d),
            "formula": "sqrt(2 (E - C_d sqrt(E))) t_s_min, C_d = 2 sqrt(E_1)",
        },
    }
    if E >= k.E_1:
        rep["distance_prior"] = distance_prior(E, k.E_1)
    if extra:
        rep.update(extra)
    return _clean(rep)
