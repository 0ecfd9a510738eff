"""Acceptance criteria: one PASS/FAIL line per criterion on the terminal.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from drumcert.basis import disk_spectrum
from drumcert.bounds import (
    J01,
    certify,
    certify_ground_state,
    compute_constants,
    eigenfunction_error,
)
from drumcert.geometry import build_domain, build_quadrature, geom_constants
from drumcert.qo import DISK_C_HT, pairwise_audit, rellich_check, disk_quadrature, weyl_check, window_qo_check
from drumcert.solver import SolverConfig, auto_resolution, find_minima, refine_minimum, scan, tension_at

E_BENCH = 10005.0213579739
E_K_BENCH = 10007.339


@pytest.fixture(scope="module")
def emit(request):
    tr = request.config.pluginmanager.getplugin("terminalreporter")

    def _emit(n, ok, text):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}"
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:
            print(line)

    return _emit


def _info(request, text):
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    if tr is not None:
        tr.write_line(f"    info: {text}")


@pytest.fixture(scope="module")
def disk():
    return build_domain("disk")


@pytest.fixture(scope="module")
def disk_constants(disk):
    gs = certify_ground_state(disk)
    return compute_constants(geom_constants(disk), gs.E_1, gs.radius), gs


@pytest.fixture(scope="module")
def bench_domain():
    return build_domain("smooth3s")


@pytest.fixture(scope="module")
def bench_constants(bench_domain):
    gs = certify_ground_state(bench_domain)
    return compute_constants(geom_constants(bench_domain), gs.E_1, gs.radius), gs


@pytest.fixture(scope="module")
def bench_run(bench_domain):
    t0 = time.perf_counter()
    rec = refine_minimum(bench_domain, 10005.0, SolverConfig(N=500, M=700), check=True)
    return rec, time.perf_counter() - t0


def test_criterion_01_disk_spectrum(emit, disk):
    t0 = time.perf_counter()
    cfg = SolverConfig(N=100, M=256)
    ref = np.array([md.E for md in disk_spectrum(110.0)])[:20]
    samples = scan(disk, 4.0, ref[-1] + 1.0, 400, cfg)
    found = []
    for c in find_minima(samples):
        rec = refine_minimum(disk, c.E, cfg)
        found += [rec.E_star] * rec.result.multiplicity
    found = np.sort(found)[:20]
    dt = time.perf_counter() - t0
    err = float(np.max(np.abs(found - ref) / ref)) if found.size == 20 else math.inf
    ok = found.size == 20 and err <= 1e-9 and dt <= 120
    emit(1, ok, f"20 lowest disk eigenvalues, max rel err {err:.2e} (<= 1e-9), {dt:.1f} s (<= 120)")
    assert ok


def test_criterion_02_certified_soundness(emit, disk, disk_constants):
    t0 = time.perf_counter()
    k, _ = disk_constants
    spec = np.array([md.E for md in disk_spectrum(2200.0)])
    rng = np.random.default_rng(2024)
    energies = rng.uniform(6.0, 2000.0, 200)
    n_iv = viol = 0
    kinds = set()
    for E in energies:
        M, N = auto_resolution(2 * np.pi, E)
        r = tension_at(disk, build_quadrature(disk, M), E, N=N)
        dist = float(np.min(np.abs(spec - E)))
        for iv in certify(E, r.t, r.t_s, k):
            n_iv += 1
            kinds.add(iv.bound_kind)
            viol += dist > iv.radius
    dt = time.perf_counter() - t0
    ok = viol == 0 and n_iv > 0 and dt <= 600
    emit(2, ok, f"{n_iv} intervals ({', '.join(sorted(kinds))}) at 200 random E, {viol} violations, {dt:.1f} s")
    assert ok


def test_criterion_03_benchmark_low_frequency(emit, request):
    t0 = time.perf_counter()
    d = build_domain("smooth3")
    coarse, fine = SolverConfig(N=100, M=200), SolverConfig(N=150, M=200)
    samples = scan(d, 5.0, 101.0, 1200, coarse)
    cands = find_minima(samples)
    stars, worst = [], 0.0
    for c in cands[:20]:
        a = refine_minimum(d, c.E, coarse)
        b = refine_minimum(d, a.E_star, fine, h0=1e-6 * a.E_star)
        stars.append(a.E_star)
        worst = max(worst, abs(a.E_star - b.E_star) / b.E_star)
    dt = time.perf_counter() - t0
    g = geom_constants(d)
    weyl = g.area * 101.0 / (4 * math.pi) - g.perimeter * math.sqrt(101.0) / (4 * math.pi)
    _info(request, f"minima below 101: {len(cands)}; two-term Weyl count {weyl:.1f}")
    _info(request, "E_j: " + " ".join(f"{e:.8f}" for e in stars))
    ok = len(stars) == 20 and worst <= 1e-8 and dt <= 300
    emit(3, ok, f"{len(stars)} minima on the cosine shape, N=100 vs 150 max rel change {worst:.1e} (<= 1e-8), "
                f"{dt:.1f} s (<= 300)")
    assert ok


def test_criterion_04_benchmark_high_frequency(emit, bench_run):
    rec, dt = bench_run
    dE = abs(rec.E_star - E_BENCH)
    ok = dE <= 5e-9 and rec.t_star <= 1e-11 and dt <= 300
    emit(4, ok, f"E* = {rec.E_star:.13f}, |dE| = {dE:.1e} (<= 5e-9), t = {rec.t_star:.2e} (<= 1e-11), "
                f"{rec.iterations} iterations, rank {rec.result.rank}/500, {dt:.1f} s (<= 300)")
    assert ok


def test_criterion_05_constants(emit, request, bench_constants):
    k, gs = bench_constants
    ok = abs(k.C_hf - 2.9) <= 0.05 and abs(k.C_MP - 1.31) <= 0.02
    d3 = build_domain("smooth3")
    gs3 = certify_ground_state(d3)
    k3 = compute_constants(geom_constants(d3), gs3.E_1, gs3.radius)
    _info(request, f"cosine shape: C_hf = {k3.C_hf:.4f}, C_MP = {k3.C_MP:.4f}, E_1 = {gs3.E_1:.10f}")
    emit(5, ok, f"C_hf = {k.C_hf:.4f} (2.9 +- 0.05), C_MP = {k.C_MP:.4f} (1.31 +- 0.02), "
                f"E_1 = {gs.E_1:.10f} +- {gs.radius:.1e}")
    assert ok


def test_criterion_06_bound_radii(emit, bench_run, bench_constants):
    rec, _ = bench_run
    k, _ = bench_constants
    r = rec.result
    ivs = {iv.bound_kind: iv.radius for iv in certify(rec.E_star, r.t, r.t_s, k)}
    ef = eigenfunction_error(rec.E_star, r.t, E_K_BENCH, k)
    targets = {"MolerPayne": 2.9e-8, "ThmB_hf": 6.3e-10, "StarSharp": 3.5e-10}
    rel = {kind: abs(ivs.get(kind, math.inf) / v - 1) for kind, v in targets.items()}
    rel["eigfn"] = abs(ef.l2_error_bound / 2.7e-10 - 1)
    rel["eigfn_MP"] = abs(ef.baseline_MP / 1.2e-8 - 1)
    ok = all(v <= 0.1 for v in rel.values())
    parts = [f"{kind} {ivs.get(kind, math.nan):.2e}" for kind in targets]
    parts += [f"eigfn {ef.l2_error_bound:.2e} vs MP {ef.baseline_MP:.2e}"]
    emit(6, ok, ", ".join(parts) + f"; worst rel dev {max(rel.values()):.3f} (<= 0.1)")
    assert ok


def test_criterion_07_pairwise_audit(emit):
    t0 = time.perf_counter()
    a = pairwise_audit(2000.0)
    dt = time.perf_counter() - t0
    ok = not a.violations and dt <= 300
    emit(7, ok, f"{a.n_modes} modes, {a.n_pairs} ordered pairs, {len(a.violations)} violations, "
                f"worst lhs/rhs {a.worst_ratio:.3f}, {dt:.2f} s")
    assert ok


def test_criterion_08_window(emit):
    ratios = [window_qo_check(E, 1.0)[1] for E in (250.0, 500.0, 1000.0, 2000.0, 4000.0)]
    spread = max(ratios) / min(ratios)
    ok = max(ratios) <= 1.1 * DISK_C_HT and spread < 3
    emit(8, ok, "op/E = " + ", ".join(f"{r:.3f}" for r in ratios) + f" (<= 4.4), spread {spread:.2f} (< 3)")
    assert ok


def test_criterion_09_rellich_weyl(emit):
    modes = disk_spectrum(400.0)[:50]
    q = disk_quadrature(modes)
    dev = max(rellich_check(md, q) for md in modes)
    rows = weyl_check(4000.0)
    worst = max(abs(rem) / math.sqrt(E) for E, _, _, rem in rows)
    ok = dev < 1e-10 and worst <= 3
    emit(9, ok, f"Rellich max deviation {dev:.1e} (< 1e-10) over 50 modes; max |R|/sqrt(E) {worst:.3f} (<= 3) "
                f"over {len(rows)} points to E = 4000")
    assert ok


def test_criterion_10_cross_validation(emit, disk):
    rng = np.random.default_rng(7)
    spec = np.array([md.E for md in disk_spectrum(2000.0)])
    n_both = n_bad = 0
    worst = 0.0
    for _ in range(50):
        E0 = rng.choice(spec)
        E = E0 + rng.choice([-1.0, 1.0]) * 10.0 ** rng.uniform(-5, math.log10(0.5))
        M, N = auto_resolution(2 * np.pi, E)
        q = build_quadrature(disk, M)
        a = tension_at(disk, q, E, N=N, method="gevp")
        b = tension_at(disk, q, E, N=N, method="gsvd")
        if 1e-7 <= a.t <= 1e-2 and 1e-7 <= b.t <= 1e-2:
            n_both += 1
            rel = abs(a.t - b.t) / b.t
            worst = max(worst, rel)
            n_bad += rel > 0.1
    ok = n_bad == 0 and n_both > 0
    emit(10, ok, f"{n_both}/50 energies with both t in [1e-7, 1e-2], worst rel diff {worst:.2e} (<= 0.1), "
                 f"{n_bad} disagreements")
    assert ok


def test_criterion_11_sharpness(emit, disk):
    spec = np.unique(np.round([md.E for md in disk_spectrum(2100.0)], 9))
    rng = np.random.default_rng(11)
    inside = spec[(spec >= 500) & (spec <= 2000)]
    ratios = []
    for E0 in rng.choice(inside, 30, replace=False):
        gap = float(np.min(np.abs(np.delete(spec, np.argmin(np.abs(spec - E0))) - E0)))
        for off in (1e-3, 1e-2, 0.1):
            if off > 0.05 * gap:
                continue
            E = E0 + off
            M, N = auto_resolution(2 * np.pi, E)
            r = tension_at(disk, build_quadrature(disk, M), E, N=N, method="gsvd")
            dist = float(np.min(np.abs(spec - E)))
            ratios.append(dist / (math.sqrt(E) * r.t_s_min))
    lo, hi = min(ratios), max(ratios)
    ok = lo >= 1.2 and hi <= 1.5
    emit(11, ok, f"{len(ratios)} energies, dist/(sqrt(E) t_s_min) in [{lo:.4f}, {hi:.4f}] (within [1.2, 1.5])")
    assert ok
