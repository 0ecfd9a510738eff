"""Minimal tension at fixed energy, energy scans, and minimum refinement."""

from __future__ import annotations

import csv
import math
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .basis import DEFAULT_DELTA, build_mfs
from .discretization import DEFAULT_THRESHOLD, assemble, regularize
from .errors import ConfigError, IndefiniteInteriorNorm, NotConverged
from .geometry import TWO_PI, BoundaryQuadrature, RadialDomain, build_quadrature, geom_constants, interior_grid

GSVD_SWITCH = 1e-7
# factor by which the relative cutoff is raised when the restricted interior Gram is indefinite
RETRY_FACTOR = 100.0
MULTIPLICITY_RATIO = 1e3
MULTIPLICITY_CAP = 1e-3


@dataclass(frozen=True)
class TensionResult:
    E: float
    t: float
    t_s: float
    t_s_min: float
    coeffs: np.ndarray
    rank: int
    method: str
    multiplicity: int = 1
    N: int = 0
    M: int = 0
    t_check: float | None = None
    spectrum: tuple = ()


@dataclass(frozen=True)
class SolverConfig:
    N: int | None = None
    M: int | None = None
    delta: float = DEFAULT_DELTA
    threshold: float = DEFAULT_THRESHOLD
    method: str = "auto"

    def __post_init__(self):
        if self.method not in ("auto", "gevp", "gsvd"):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.N is not None and self.N < 1:
            raise ConfigError("N must be positive")
        if self.M is not None and self.M < 16:
            raise ConfigError("M must be at least 16")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if not 0 < self.threshold < 1:
            raise ConfigError("threshold must lie in (0, 1)")


def auto_resolution(perimeter: float, E: float) -> tuple[int, int]:
    """Six boundary points per wavelength, at least 200; N = 0.7 M."""
    M = max(200, math.ceil(6.0 * perimeter * math.sqrt(E) / TWO_PI))
    M += M % 2
    return M, math.ceil(0.7 * M)


def resolve(d: RadialDomain, E: float, cfg: SolverConfig) -> tuple[int, int]:
    if cfg.M is not None and cfg.N is not None:
        return cfg.M, cfg.N
    M_auto, N_auto = auto_resolution(geom_constants(d).perimeter, E)
    M = cfg.M if cfg.M is not None else M_auto
    N = cfg.N if cfg.N is not None else (N_auto if cfg.M is None else math.ceil(0.7 * M))
    return M, N


def _min_gevp(A: np.ndarray, B: np.ndarray):
    """Eigenpairs of the definite pencil (A^T A, B), ascending, with V^T B V = I.

    With B = L L^T the eigenvalues are the squared singular values of A L^{-T};
    taking the SVD avoids the rounding floor of forming A^T A.
    Raises LinAlgError when B is not numerically positive definite.
    """
    L = np.linalg.cholesky(B)
    C = sla.solve_triangular(L, A.T, lower=True).T
    if C.shape[0] >= C.shape[1]:
        _, s, Vt = np.linalg.svd(C, full_matrices=False)
        lam, Y = s[::-1] ** 2, Vt[::-1].T
    else:
        lam, Y = np.linalg.eigh(C.T @ C)
    return lam, sla.solve_triangular(L.T, Y, lower=False)


def _gsvd_small(A: np.ndarray, B: np.ndarray):
    """Generalized singular values ||A y|| / ||B y|| ascending, with vectors.

    QR of the stacked pair, then SVD of the top block of the orthonormal factor.
    """
    m = A.shape[0]
    Qf, R = np.linalg.qr(np.vstack([A, B]))
    _, c, Vt = np.linalg.svd(Qf[:m], full_matrices=False)
    order = np.argsort(c)
    c = np.clip(c[order], 0.0, 1.0)
    V = Vt[order].T
    s = np.linalg.norm(Qf[m:] @ V, axis=0)
    sigma = np.where(s > 0, c / np.where(s > 0, s, 1.0), np.inf)
    Y = sla.solve_triangular(R, V, lower=False, check_finite=False)
    return sigma, Y


def _count_cluster(values: np.ndarray) -> int:
    v = np.sort(np.asarray(values))
    if v.size == 0:
        return 0
    t1 = max(v[0], 1e-300)
    return max(1, int(np.count_nonzero((v <= MULTIPLICITY_RATIO * t1) & (v <= MULTIPLICITY_CAP))))


def _prepare(d, q, E, N, cfg, basis):
    if basis is None:
        basis = build_mfs(d, E, N, cfg.delta)
    else:
        basis = basis.with_energy(E)
    return basis


def tension_at(d: RadialDomain, q: BoundaryQuadrature, E: float, N: int | None = None,
               method: str = "auto", *, config: SolverConfig | None = None, basis=None,
               check: bool = False, weighted_min: bool = True) -> TensionResult:
    """Minimal tension over the regularized span of the basis at energy E.

    ``weighted_min=False`` skips the second solve for ``t_s_min`` (reported as nan).

    ``basis`` may be a prebuilt basis (its energy is reset to E), e.g. an MFS
    basis with fixed charge points or a closed-form mode basis.
    """
    if not E > 0:
        raise ConfigError("energy must be positive")
    cfg = config or SolverConfig()
    if method not in ("auto", "gevp", "gsvd"):
        raise ConfigError(f"unknown method {method!r}")
    if basis is None and N is None:
        N = cfg.N if cfg.N is not None else math.ceil(0.7 * q.M)
    b = _prepare(d, q, E, N, cfg, basis)
    sys = assemble(d, q, b)
    sub = regularize(sys, cfg.threshold)
    W = sub.coeff_map
    Gr = sys.restricted_gram(W)
    use = "gevp" if method == "auto" else method
    if use == "gevp":
        try:
            np.linalg.cholesky(Gr)
        except np.linalg.LinAlgError:
            # the least resolved directions spoil the interior norm; drop them once
            keep = sub.singular_values >= RETRY_FACTOR * cfg.threshold * sub.singular_values[0]
            W2 = W[:, keep]
            Gr2 = sys.restricted_gram(W2)
            try:
                np.linalg.cholesky(Gr2)
                W, Gr = W2, Gr2
            except np.linalg.LinAlgError:
                if method != "auto":
                    raise IndefiniteInteriorNorm(
                        f"restricted interior Gram is indefinite at E = {E:.17g} even after shrinking the subspace"
                    )
                # the GSVD needs no definite interior norm
                use = "gsvd"
    PW = sys.P @ W
    QW = sys.Q @ W
    PsW = PW / np.sqrt(sys.xdotn)[:, None]
    rank = W.shape[1]

    if use == "gevp":
        lam, Y = _min_gevp(PW, Gr)
        t = math.sqrt(max(lam[0], 0.0))
        if method == "auto" and t < GSVD_SWITCH:
            use = "gsvd"
            W = sub.coeff_map
            Gr = sys.restricted_gram(W)
            PW, QW = sys.P @ W, sys.Q @ W
            PsW = PW / np.sqrt(sys.xdotn)[:, None]
            rank = W.shape[1]
        else:
            y = Y[:, 0]
            gens = np.sqrt(np.clip(lam, 0.0, None))
            t_s_min = float("nan")
            if weighted_min:
                lam_s, _ = _min_gevp(PsW, Gr)
                t_s_min = math.sqrt(max(lam_s[0], 0.0))
    if use == "gsvd":
        gens, Y = _gsvd_small(PW, QW)
        y = Y[:, 0]
        t = float(gens[0])
        t_s_min = float(_gsvd_small(PsW, QW)[0][0]) if weighted_min else float("nan")

    interior = float(y @ Gr @ y)
    if use == "gsvd":
        qn = float(np.linalg.norm(QW @ y))
        scale = math.sqrt(interior) if interior > 0 else qn
        t_s = float(np.linalg.norm(PsW @ y)) / qn
    else:
        scale = math.sqrt(interior) if interior > 0 else 1.0
        t_s = float(np.linalg.norm(PsW @ y)) / scale
    coeffs = W @ (y / scale)

    t_check = None
    if check:
        t_check = boundary_tension(d, b, coeffs, 2 * q.M, offset=0.5)
    return TensionResult(
        E=float(E), t=float(t), t_s=float(t_s), t_s_min=float(t_s_min), coeffs=coeffs,
        rank=rank, method=use.upper(), multiplicity=_count_cluster(gens),
        N=b.N, M=q.M, t_check=t_check, spectrum=tuple(float(g) for g in np.sort(gens)[:5]),
    )


def boundary_tension(d: RadialDomain, b, coeffs: np.ndarray, M: int, offset: float = 0.0) -> float:
    """||u||_boundary / ||u||_interior on an independent quadrature, u = sum c_n b_n."""
    q = build_quadrature(d, M, offset=offset)
    sys = assemble(d, q, b)
    c = coeffs[:, None]
    interior = float(sys.restricted_gram(c)[0, 0])
    return float(np.linalg.norm(sys.P @ coeffs)) / math.sqrt(max(interior, 1e-300))


@dataclass(frozen=True)
class ScanSample:
    E: float
    t: float
    t_s: float
    rank: int
    method: str


def _scan_worker(args):
    d, q, b, cfg, E = args
    r = tension_at(d, q, E, method=cfg.method, config=cfg, basis=b)
    return ScanSample(r.E, r.t, r.t_s, r.rank, r.method)


def _picklable(obj) -> bool:
    try:
        pickle.dumps(obj)
        return True
    except Exception:
        return False


def scan(d: RadialDomain, E_lo: float, E_hi: float, n_samples: int,
         config: SolverConfig | None = None, jobs: int = 1) -> list[ScanSample]:
    """Tension on a uniform energy grid. N, M resolved once at E_hi."""
    if not 0 < E_lo < E_hi:
        raise ConfigError("need 0 < E_lo < E_hi")
    if n_samples < 2:
        raise ConfigError("need at least 2 samples")
    cfg = config or SolverConfig()
    M, N = resolve(d, E_hi, cfg)
    q = build_quadrature(d, M)
    b = build_mfs(d, E_hi, N, cfg.delta)
    grid = np.linspace(E_lo, E_hi, n_samples)
    tasks = [(d, q, b, cfg, float(E)) for E in grid]
    jobs = max(1, int(jobs or os.cpu_count() or 1))
    if jobs > 1 and _picklable(tasks[0]):
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_scan_worker, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_scan_worker(tk) for tk in tasks]


@dataclass(frozen=True)
class Candidate:
    E: float
    t: float
    index: int
    plateau: bool = False


def find_minima(samples, key: str = "t") -> list[Candidate]:
    """Samples strictly below both neighbours; flat runs are reported once, flagged."""
    vals = [getattr(s, key) for s in samples]
    out: list[Candidate] = []
    i = 1
    n = len(vals)
    while i < n - 1:
        if vals[i] < vals[i - 1]:
            j = i
            while j + 1 < n and vals[j + 1] == vals[i]:
                j += 1
            if j + 1 < n and vals[j + 1] > vals[i]:
                # ties resolved toward the lower energy
                out.append(Candidate(samples[i].E, vals[i], i, plateau=j > i))
            i = j + 1
        else:
            i += 1
    return out


def write_scan_csv(samples, path_or_file) -> None:
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["E", "t", "t_s", "rank", "method"])
        for s in samples:
            w.writerow([f"{s.E:.17g}", f"{s.t:.17g}", f"{s.t_s:.17g}", s.rank, s.method])
    finally:
        if own:
            fh.close()


@dataclass
class MinimumRecord:
    E_star: float
    t_star: float
    t_s_star: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    result: TensionResult | None = None
    h0: float = 0.0
    stagnated: bool = False
    bracket: tuple = ()


def refine_minimum(d: RadialDomain | None, E_guess: float, config: SolverConfig | None = None, *,
                   rtol: float = 1e-13, max_iter: int = 30, h0: float | None = None,
                   h_min: float | None = None, max_step: float | None = None,
                   accept_t: float = 1e-3, tension_fn=None, check: bool = False,
                   polish: bool = True) -> MinimumRecord:
    """Vertex iteration of parabolas fitted to t^2 at E_c - h, E_c, E_c + h.

    Non-convex fits step toward the lower sample; every accepted step must lower t^2
    (halving otherwise); h shrinks geometrically with the step.  ``tension_fn``
    replaces the solver (E -> TensionResult or float) for synthetic inputs.
    After convergence t is minimized directly over a few rtol-widths around the vertex.
    """
    if not E_guess > 0:
        raise ConfigError("energy guess must be positive")
    cfg = config or SolverConfig()
    final_fn = None
    if tension_fn is None:
        M, N = resolve(d, E_guess, cfg)
        q = build_quadrature(d, M)
        b = build_mfs(d, E_guess, N, cfg.delta)
        # the GSVD is the accurate route near a minimum
        method = "gsvd" if cfg.method == "auto" else cfg.method

        def tension_fn(E):
            return tension_at(d, q, E, method=method, config=cfg, basis=b, weighted_min=False)

        def final_fn(E):
            return tension_at(d, q, E, method=method, config=cfg, basis=b)

    cache: dict[float, object] = {}

    def f(E):
        if E not in cache:
            cache[E] = tension_fn(E)
        r = cache[E]
        t = r.t if hasattr(r, "t") else float(r)
        return t * t

    h = h0 if h0 is not None else 1e-4 * E_guess
    h0_used = h
    h_min = h_min if h_min is not None else 1e-9 * E_guess
    max_step = max_step if max_step is not None else 20.0 * h
    Ec = float(E_guess)
    history = []
    converged = stagnated = False
    it = 0
    while it < max_iter:
        it += 1
        fm, f0, fp = f(Ec - h), f(Ec), f(Ec + h)
        A = (fp + fm - 2.0 * f0) / (2.0 * h * h)
        B = (fp - fm) / (2.0 * h)
        if A > 0:
            dE = -B / (2.0 * A)
            convex = True
        else:
            dE = 2.0 * h if fp < fm else -2.0 * h
            convex = False
        dE = float(np.clip(dE, -max_step, max_step))
        if convex and abs(dE) < rtol * abs(Ec):
            history.append({"E": Ec, "h": h, "dE": dE, "convex": convex})
            Ec = Ec + dE
            converged = True
            break
        # accept only steps that lower t^2
        best_side = min((fm, Ec - h), (f0, Ec), (fp, Ec + h))
        step = dE
        for _ in range(8):
            if f(Ec + step) <= best_side[0]:
                break
            step *= 0.5
        else:
            step = best_side[1] - Ec
        history.append({"E": Ec, "h": h, "dE": step, "convex": convex})
        Ec = Ec + step
        if h <= h_min and abs(step) < h_min:
            stagnated = converged = True
            break
        h = max(h_min, min(h, abs(step)))

    if converged and polish:
        # near the floor the parabola vertex is noise-limited; minimize t itself locally
        w = 5.0 * rtol * abs(Ec) + abs(history[-1]["dE"])
        # offset coordinate: scipy's stopping rule is relative to |x|, useless at x ~ E
        centre = Ec
        res = minimize_scalar(lambda u: f(centre + w * u), bounds=(-1.0, 1.0), method="bounded",
                              options={"xatol": 0.1 * rtol * abs(Ec) / w})
        if f(centre + w * res.x) <= f(Ec):
            Ec = centre + w * float(res.x)
        bracket = (Ec - w, Ec + w)
    else:
        bracket = (Ec - h, Ec + h)
    lo, hi = bracket
    if f(Ec) > min(f(lo), f(hi)):
        Ec = lo if f(lo) < f(hi) else hi
    r = cache[Ec]
    if final_fn is not None:
        r = final_fn(Ec)
    if check and hasattr(r, "coeffs") and d is not None:
        r = replace(r, t_check=boundary_tension(d, b.with_energy(Ec), r.coeffs, 2 * q.M, offset=0.5))
    t_star = r.t if hasattr(r, "t") else float(r)
    t_s_star = r.t_s if hasattr(r, "t_s") else float("nan")
    record = MinimumRecord(Ec, t_star, t_s_star, it, converged, history,
                           r if hasattr(r, "coeffs") else None, h0_used, stagnated, bracket)
    if not converged:
        raise NotConverged(f"parabola iteration did not converge in {max_iter} steps", record)
    if t_star > accept_t:
        record.converged = False
        raise NotConverged(f"local tension minimum t = {t_star:.3g} is not an eigenvalue basin", record)
    return record


@dataclass(frozen=True)
class ModeGrid:
    points: np.ndarray
    values: np.ndarray
    h: float

    def l2_norm(self) -> float:
        return float(math.sqrt(self.h * self.h * np.sum(self.values**2)))


def eval_mode(d: RadialDomain, coeffs: np.ndarray, b, h: float) -> ModeGrid:
    """u = sum c_n b_n at square-grid points inside the domain."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (b.N,):
        raise ConfigError(f"expected {b.N} coefficients, got shape {coeffs.shape}")
    pts, inside = interior_grid(d, h)
    pts = pts[inside]
    vals = np.empty(len(pts))
    chunk = max(1, 2_000_000 // max(1, b.N))
    for s in range(0, len(pts), chunk):
        vals[s:s + chunk] = b.evaluate(pts[s:s + chunk])[0] @ coeffs
    return ModeGrid(pts, vals, float(h))
