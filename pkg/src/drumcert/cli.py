"""Command-line interface: scan | solve | certify | verify | eval-mode.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import bounds, qo, solver
from .basis import build_mfs, disk_mode, disk_spectrum, mode_basis
from .errors import ConfigError, DrumCertError, NotConverged, NumericalError
from .geometry import build_domain, geom_constants

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_domain(value):
    """Builtin name, inline JSON, or path to a JSON file."""
    if isinstance(value, dict):
        return build_domain(value)
    if not isinstance(value, str) or not value:
        raise ConfigError("missing domain")
    if value.lstrip().startswith(("{", "[")):
        spec = json.loads(value)
    elif value.endswith(".json"):
        with open(value) as fh:
            spec = json.load(fh)
    else:
        spec = value
    if isinstance(spec, list):
        spec = {"fourier": spec}
    return build_domain(spec)


def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise ConfigError(f"range must look like LO:HI, got {text!r}")
    if not 0 < lo < hi:
        raise ConfigError(f"need 0 < LO < HI, got {lo}:{hi}")
    return lo, hi


def solver_config(a) -> solver.SolverConfig:
    method = "gsvd" if getattr(a, "gsvd", False) else a.method
    return solver.SolverConfig(N=a.n, M=a.m, delta=a.delta, threshold=a.threshold, method=method)


def _common(p: argparse.ArgumentParser, with_solver: bool = True) -> None:
    p.add_argument("--config", help="JSON file with keys named like the flags; flags override it")
    p.add_argument("--domain", default="disk", help="builtin name, inline JSON or a .json file")
    if with_solver:
        from .basis import DEFAULT_DELTA
        from .discretization import DEFAULT_THRESHOLD

        p.add_argument("--n", type=int, default=None, help="basis size (default: 0.7 M)")
        p.add_argument("--m", type=int, default=None, help="quadrature nodes (default: 6 per wavelength, >= 200)")
        p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
        p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
        p.add_argument("--method", choices=("auto", "gevp", "gsvd"), default="auto")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drumcert", description="Certified Dirichlet eigenvalues of star-shaped planar domains")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("scan", help="tension curve on an energy grid")
    _common(s)
    s.add_argument("--e-range", required=False, default=None)
    s.add_argument("--samples", type=int, default=260)
    s.add_argument("--jobs", type=int, default=0, help="worker processes (0: all cores)")
    s.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    s.add_argument("--minima-out", default=None, help="JSON file for the located minima")
    s.add_argument("--refine", action="store_true", help="refine every located minimum")

    s = sub.add_parser("solve", help="refine one eigenvalue and certify it")
    _common(s)
    s.add_argument("--e-guess", type=float, default=None)
    s.add_argument("--gsvd", action="store_true", help="force the GSVD route")
    s.add_argument("--e1", type=float, default=None, help="certified lowest eigenvalue (else computed)")
    s.add_argument("--e1-radius", type=float, default=0.0)
    s.add_argument("--e-k", type=float, default=None, help="nearest other eigenvalue, for the eigenfunction bound")
    s.add_argument("--e-k-radius", type=float, default=0.0)
    s.add_argument("--neighbor-guess", type=float, default=None, help="refine the neighbour eigenvalue from here")
    s.add_argument("--hf-min-e", type=float, default=100.0)
    s.add_argument("--small-tension", type=float, default=1e-3)
    s.add_argument("--out", default="-")
    s.add_argument("--coeffs-out", default=None)
    s.add_argument("--grid-h", type=float, default=None)
    s.add_argument("--grid-out", default=None)

    s = sub.add_parser("certify", help="certification report for given tensions")
    _common(s, with_solver=False)
    s.add_argument("--e", type=float, default=None)
    s.add_argument("--t", type=float, default=None)
    s.add_argument("--t-s", type=float, default=None)
    s.add_argument("--t-s-min", type=float, default=None)
    s.add_argument("--e1", type=float, default=None)
    s.add_argument("--e1-radius", type=float, default=0.0)
    s.add_argument("--e-k", type=float, default=None)
    s.add_argument("--c1", type=float, default=None)
    s.add_argument("--c2", type=float, default=None)
    s.add_argument("--hf-min-e", type=float, default=100.0)
    s.add_argument("--small-tension", type=float, default=1e-3)
    s.add_argument("--out", default="-")

    s = sub.add_parser("verify", help="quasi-orthogonality audit on the unit disk")
    s.add_argument("--config")
    s.add_argument("--suite", choices=("pairwise", "window", "rellich", "weyl", "quasimode", "all"), default="all")
    s.add_argument("--e-max", type=float, default=2000.0)
    s.add_argument("--e", type=float, nargs="*", default=None, help="window centres")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--modes", type=int, default=50)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")

    s = sub.add_parser("eval-mode", help="sample a computed mode on a square grid")
    _common(s, with_solver=False)
    s.add_argument("--coeffs", default=None, help="coefficient JSON written by solve --coeffs-out")
    s.add_argument("--h", type=float, default=0.005)
    s.add_argument("--out", default="-")
    return p


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    a = parser.parse_args(argv)
    if getattr(a, "config", None):
        try:
            with open(a.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {a.config}: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        known = set(vars(a))
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        # file values become defaults, so explicit flags still win
        sp = parser._subparsers._group_actions[0].choices[a.command]
        sp.set_defaults(**cfg)
        a = parser.parse_args(argv)
    return a


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_scan(a) -> int:
    if a.e_range is None:
        raise ConfigError("scan needs --e-range LO:HI")
    lo, hi = parse_range(a.e_range)
    d = parse_domain(a.domain)
    cfg = solver_config(a)
    samples = solver.scan(d, lo, hi, a.samples, cfg, jobs=a.jobs or os.cpu_count() or 1)
    fh, own = _open_out(a.out)
    try:
        solver.write_scan_csv(samples, fh)
    finally:
        if own:
            fh.close()
    minima = []
    for c in solver.find_minima(samples):
        item = {"E": c.E, "t": c.t, "plateau": c.plateau}
        if a.refine:
            try:
                rec = solver.refine_minimum(d, c.E, solver.SolverConfig(cfg.N, cfg.M, cfg.delta, cfg.threshold, "auto"))
                item.update(E_star=rec.E_star, t_star=rec.t_star, converged=True)
            except NotConverged as exc:
                item.update(converged=False, note=str(exc))
        minima.append(item)
    summary = {"domain": d.to_spec(), "e_range": [lo, hi], "samples": a.samples, "minima": minima}
    if a.minima_out:
        _dump(summary, a.minima_out)
    else:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr if a.out in (None, "-") else sys.stdout)
    return EXIT_OK


def _ground_state(d, a):
    if a.e1 is not None:
        return a.e1, a.e1_radius, None
    gs = bounds.certify_ground_state(d)
    return gs.E_1, gs.radius, gs


def cmd_solve(a) -> int:
    if a.e_guess is None:
        raise ConfigError("solve needs --e-guess")
    d = parse_domain(a.domain)
    cfg = solver_config(a)
    flags = bounds.RegimeFlags(a.hf_min_e, a.small_tension)
    E1, E1_rad, _ = _ground_state(d, a)
    rec = solver.refine_minimum(d, a.e_guess, cfg, check=True)
    res = rec.result
    g = geom_constants(d)
    k = bounds.compute_constants(g, E1, E1_rad)
    extra = {
        "refinement": {"E_guess": a.e_guess, "iterations": rec.iterations, "converged": rec.converged,
                       "stagnated": rec.stagnated, "h0": rec.h0, "bracket": list(rec.bracket),
                       "history": rec.history},
        "solver": {"N": res.N, "M": res.M, "delta": cfg.delta, "threshold": cfg.threshold,
                   "method": res.method, "rank": res.rank, "multiplicity": res.multiplicity},
        "t_check": res.t_check,
        "E_1": {"value": E1, "radius": E1_rad},
    }
    if res.t_check is not None:
        # same bounds with the tension re-measured on an independent quadrature
        extra["intervals_check"] = [
            {"bound_kind": iv.bound_kind, "radius": iv.radius, "rigorous": iv.rigorous}
            for iv in bounds.certify(rec.E_star, max(res.t, res.t_check), None, k, flags)
        ]
    E_k, rad_k = a.e_k, a.e_k_radius
    if a.neighbor_guess is not None:
        nb = solver.refine_minimum(d, a.neighbor_guess, cfg)
        E_k, rad_k = nb.E_star, k.C_MP * nb.E_star * nb.t_star
        extra["neighbor"] = {"E_star": nb.E_star, "t_star": nb.t_star, "radius_MP": rad_k}
    if E_k is not None:
        eb = bounds.eigenfunction_error(rec.E_star, res.t, E_k, k, radius_k=rad_k, flags=flags)
        extra["eigenfunction_error"] = {"E_k": eb.E_k, "l2_error_bound": eb.l2_error_bound,
                                        "baseline_MP": eb.baseline_MP, "constant": eb.constant,
                                        "constant_kind": eb.constant_kind}
    report = bounds.certification_report(d.to_spec(), rec.E_star, res.t, res.t_s, k,
                                         t_s_min=res.t_s_min, flags=flags, extra=extra)
    _dump(report, a.out)
    if a.coeffs_out:
        _dump({"basis": "mfs", "domain": d.to_spec(), "E": rec.E_star, "N": res.N, "delta": cfg.delta,
               "coeffs": [float(c) for c in res.coeffs]}, a.coeffs_out)
    if a.grid_h:
        b = build_mfs(d, rec.E_star, res.N, cfg.delta)
        _write_grid(solver.eval_mode(d, res.coeffs, b, a.grid_h), a.grid_out)
    return EXIT_OK


def cmd_certify(a) -> int:
    if a.e is None or a.t is None:
        raise ConfigError("certify needs --e and --t")
    d = parse_domain(a.domain)
    if a.e1 is None:
        E1, E1_rad, _ = _ground_state(d, a)
    else:
        E1, E1_rad = a.e1, a.e1_radius
    k = bounds.compute_constants(geom_constants(d), E1, E1_rad)
    flags = bounds.RegimeFlags(a.hf_min_e, a.small_tension, a.c1, a.c2)
    extra = {"E_1": {"value": E1, "radius": E1_rad}}
    if a.e_k is not None:
        eb = bounds.eigenfunction_error(a.e, a.t, a.e_k, k, flags=flags)
        extra["eigenfunction_error"] = {"E_k": eb.E_k, "l2_error_bound": eb.l2_error_bound,
                                        "baseline_MP": eb.baseline_MP, "constant": eb.constant,
                                        "constant_kind": eb.constant_kind}
    report = bounds.certification_report(d.to_spec(), a.e, a.t, a.t_s, k, t_s_min=a.t_s_min,
                                         flags=flags, extra=extra)
    _dump(report, a.out)
    return EXIT_OK


def cmd_verify(a) -> int:
    records = []
    suites = ("rellich", "pairwise", "window", "weyl", "quasimode") if a.suite == "all" else (a.suite,)
    for suite in suites:
        if suite == "rellich":
            modes = disk_spectrum(max(a.e_max, 50.0))[: a.modes]
            q = qo.disk_quadrature(modes)
            for md in modes:
                dev = qo.rellich_check(md, q)
                records.append(qo.CheckRecord("rellich", dev, 1e-10, dev < 1e-10, {"mode": md.label, "E": md.E}))
        elif suite == "pairwise":
            audit = qo.pairwise_audit(a.e_max)
            records.append(qo.CheckRecord("pairwise_audit", float(len(audit.violations)), 0.0,
                                          not audit.violations,
                                          {"n_modes": audit.n_modes, "n_pairs": audit.n_pairs,
                                           "worst_ratio": audit.worst_ratio,
                                           "violations": audit.violations[:20]}))
        elif suite == "window":
            for E in a.e or [250.0, 500.0, 1000.0, 2000.0, 4000.0]:
                op, ratio, g = qo.window_qo_check(E, a.c)
                records.append(qo.CheckRecord("window", ratio, qo.DISK_C_HT, ratio <= qo.DISK_C_HT,
                                              {"E": E, "c": a.c, "op_norm": op, "n_modes": len(g.modes)}))
        elif suite == "weyl":
            for E, n, main, rem in qo.weyl_check(min(a.e_max, 4000.0) if a.e_max else 4000.0):
                records.append(qo.CheckRecord("weyl", abs(rem), 3 * math.sqrt(E), abs(rem) <= 3 * math.sqrt(E),
                                              {"E": E, "N": n, "main": main}))
        elif suite == "quasimode":
            rng = np.random.default_rng(a.seed)
            for E in a.e or [1000.0]:
                modes = qo.window_modes(E, math.sqrt(E))
                q = qo.disk_quadrature(modes)
                for _ in range(a.trials):
                    c = rng.standard_normal(len(modes))
                    records.append(qo.quasimode_bound_check(modes, c / np.linalg.norm(c), q))
                g = qo.boundary_gram(modes, q)
                top = np.linalg.eigh(g.gram_plain)[1][:, -1]
                records.append(qo.quasimode_bound_check(modes, top, q))
    fh, own = _open_out(a.out)
    try:
        qo.write_jsonl(records, fh)
    finally:
        if own:
            fh.close()
    return EXIT_OK if all(r.passed for r in records) else EXIT_NUMERIC


def _write_grid(grid, path) -> None:
    fh, own = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "u"])
        for (x, y), u in zip(grid.points, grid.values):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{u:.17g}"])
    finally:
        if own:
            fh.close()


def load_coefficients(path):
    """Return (domain, basis, coeffs) from a coefficient JSON file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read coefficient file: {exc}")
    if not text.strip():
        raise ConfigError("coefficient file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"coefficient file is not JSON: {exc}")
    coeffs = np.asarray(data.get("coeffs", []), dtype=float)
    if coeffs.size == 0:
        raise ConfigError("coefficient file holds no coefficients")
    kind = data.get("basis", "mfs")
    if kind == "disk_modes":
        modes = [disk_mode(int(m), int(k), str(p)) for m, k, p in data["modes"]]
        if len(modes) != coeffs.size:
            raise ConfigError("one coefficient per mode required")
        return build_domain("disk"), mode_basis(modes), coeffs
    if kind != "mfs":
        raise ConfigError(f"unknown basis kind {kind!r}")
    d = parse_domain(data.get("domain") or "disk")
    from .basis import DEFAULT_DELTA

    b = build_mfs(d, float(data["E"]), int(data.get("N", coeffs.size)), float(data.get("delta", DEFAULT_DELTA)))
    if b.N != coeffs.size:
        raise ConfigError(f"basis size {b.N} does not match {coeffs.size} coefficients")
    return d, b, coeffs


def cmd_eval_mode(a) -> int:
    if not a.coeffs:
        raise ConfigError("eval-mode needs --coeffs")
    d, b, c = load_coefficients(a.coeffs)
    _write_grid(solver.eval_mode(d, c, b, a.h), a.out)
    return EXIT_OK


COMMANDS = {"scan": cmd_scan, "solve": cmd_solve, "certify": cmd_certify,
            "verify": cmd_verify, "eval-mode": cmd_eval_mode}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = _apply_config(parser, argv)
        return COMMANDS[a.command](a)
    except ConfigError as exc:
        print(f"drumcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"drumcert: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DrumCertError as exc:
        print(f"drumcert: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
