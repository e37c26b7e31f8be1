"""Command-line front end: ``blab <subcommand> [flags]``.

Exit codes: 0 success, 1 invariant failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eigenfields import (
    DongState,
    dong_F_profile,
    dong_log_q_laplacian_check,
    lift,
    load_eigenfunction,
    random_points,
    random_sphere_eigenfunction,
    random_torus_eigenfunction,
    zonal_sphere_eigenfunction,
    make_torus_eigenfunction,
)
from .errors import BlabError, ConfigError, IngestError, NotResolvedError
from .fields import GeodesicBall, expansion_field
from .frequency import doubling_index, frequency_profile
from .io import RunManifest, ingest
from .lab import (
    BOUNDS,
    SweepConfig,
    approximate_by_truncation,
    bernstein_ratio,
    classical_baselines,
    fitted_constant,
    harmonicity_residual,
    nodal_point,
    sphere_degree,
    sweep,
)
from .sphharm import HarmonicExpansion, exact_frequency
from .supnorm import ResolutionPolicy, sup_norm

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


# ------------------------------------------------------------- parsing

def _floats(text: str) -> list[float]:
    """Comma list of floats, or geom:a:b:n / lin:a:b:n."""
    try:
        if text.startswith(("geom:", "lin:")):
            kind, a, b, n = text.split(":")
            fn = np.geomspace if kind == "geom" else np.linspace
            return [float(v) for v in fn(float(a), float(b), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a list of numbers") from None


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("BLAB_THREADS", "1")))
    except ValueError:
        return 1


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    g.add_argument("--out", help="output path; a <out>.manifest.json is written next to it")
    g.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (default $BLAB_THREADS or 1)")
    g.add_argument("--grid-factor", type=float, default=ResolutionPolicy.grid_factor,
                   help="sup-norm grid spacing as a fraction of min(r, 1/B)")
    g.add_argument("--refine-tol", type=float, default=ResolutionPolicy.refine_tol,
                   help="refinement stops below this fraction of min(r, 1/B)")
    g.add_argument("--force", action="store_true", help="grid fields without a declared band limit at the ball scale")
    return p


def _eigen_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("eigenfunction")
    g.add_argument("--eigen", help="JSON eigenfunction spec (overrides the flags below)")
    g.add_argument("--manifold", choices=("torus", "sphere"), default="torus")
    g.add_argument("--dim", type=int, default=2, help="manifold dimension (T^d or S^n)")
    g.add_argument("--lambda", dest="lam", type=float, help="eigenvalue")
    g.add_argument("--degree", type=int, help="sphere degree k (lambda = k(k+n-1))")
    g.add_argument("--modes", type=int, default=1,
                   help="1: single lattice mode (torus) or zonal (sphere); >1: random combination")


def _center(text: str | None, dim: int) -> np.ndarray | None:
    if text is None:
        return None
    c = np.array(_floats(text))
    if c.size != dim:
        raise ConfigError(f"center has {c.size} coordinates, expected {dim}")
    return c


def _policy(a) -> ResolutionPolicy:
    return ResolutionPolicy(grid_factor=a.grid_factor, refine_tol=a.refine_tol, force=a.force)


def _eigenfunction(a):
    if a.eigen:
        return load_eigenfunction(a.eigen)
    if a.manifold == "sphere":
        k = a.degree if a.degree is not None else (sphere_degree(a.lam, a.dim) if a.lam else None)
        if k is None:
            raise ConfigError("sphere eigenfunctions need --degree or --lambda")
        return zonal_sphere_eigenfunction(a.dim, k) if a.modes == 1 else random_sphere_eigenfunction(a.dim, k, a.seed)
    if a.lam is None:
        raise ConfigError("torus eigenfunctions need --lambda")
    lam = int(a.lam)
    if lam != a.lam:
        raise ConfigError("torus eigenvalues are integers |m|^2")
    if a.modes == 1:
        m = math.isqrt(lam)
        if m * m == lam:
            return make_torus_eigenfunction(a.dim, [((m,) + (0,) * (a.dim - 1), 0.0, 1.0)], a.seed)
    return random_torus_eigenfunction(a.dim, lam, max(1, a.modes), a.seed)


def _default_center(ef, seed: int) -> np.ndarray:
    start = random_points(ef, ef.dim, 1, np.random.default_rng(seed))[0]
    return nodal_point(ef, start)


def _manifest(a, outputs: list) -> None:
    if not a.out:
        return
    config = {k: v for k, v in vars(a).items() if k != "func"}
    man = RunManifest(config, a.seed)
    man.record(*outputs)
    man.finish()
    man.write(Path(str(a.out) + ".manifest.json"))


def _fmt(x: float) -> str:
    return "%g" % round(float(x), 6)


# ------------------------------------------------------------- commands

def cmd_freq(a) -> int:
    radii = a.r_grid if a.r_grid else [a.r]
    if a.expansion:
        h = HarmonicExpansion.from_json(a.expansion)
        fld = expansion_field(h)
        c = _center(a.center, h.d)
        tol = 1e-7
    elif a.field:
        fld = ingest(a.field).to_field()
        c = _center(a.center, fld.dim)
        tol = a.mono_tol
        h = None
    else:
        raise ConfigError("freq needs --expansion or --field")
    order = a.order
    prof = frequency_profile(fld, None, c, radii, order, a.threads)
    if len(radii) == 1:
        print("%.6f" % prof.values[0])
    else:
        for r, n in zip(prof.radii, prof.values):
            print("%.6g %.6f" % (r, n))
    if h is not None and c is None and a.exact:
        for r in radii:
            print("exact %.6g %.6f" % (r, exact_frequency(h, r)))
    if a.out:
        prof.to_csv(a.out)
        _manifest(a, [a.out])
    if prof.max_violation > tol:
        print(f"monotonicity violated by {prof.max_violation:.3g} (tolerance {tol:g})", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_doubling(a) -> int:
    h = HarmonicExpansion.from_json(a.expansion)
    val = doubling_index(expansion_field(h), _center(a.center, h.d), a.r, a.order)
    print("%.6f" % val)
    if a.out:
        Path(a.out).write_text(json.dumps({"r": a.r, "doubling_index": val}) + "\n")
        _manifest(a, [a.out])
    return EXIT_OK


def cmd_bernstein(a) -> int:
    ef = _eigenfunction(a)
    c = _center(a.center, ef.dim)
    if c is None:
        c = _default_center(ef, a.seed)
    rep = bernstein_ratio(ef, GeodesicBall(ef.manifold, c, a.r), _policy(a), a.delta)
    print("lambda %g r %g ratio %.6f" % (rep.lam, rep.r, rep.ratio))
    for k in BOUNDS:
        print("  %-6s bound %-12.6g C %.6g" % (k, rep.bounds[k], rep.constants[k]))
    if a.out:
        row = rep.row(0)
        row["center"] = c.tolist()
        Path(a.out).write_text(json.dumps(row, indent=1) + "\n")
        _manifest(a, [a.out])
    return EXIT_OK


def cmd_sweep(a) -> int:
    if a.manifold == "sphere" and a.degree_list:
        lams = [float(k * (k + a.dim - 1)) for k in a.degree_list]
    else:
        lams = a.lambdas
    if not lams:
        raise ConfigError("sweep needs --lambda (list) or, on spheres, --degree (list)")
    cfg = SweepConfig(a.manifold, tuple(lams), tuple(a.r_grid or [a.r]), a.dim, a.centers, a.n_centers,
                      "single" if a.modes == 1 else "random", max(1, a.modes), a.delta, _policy(a),
                      a.out, a.seed, a.threads)
    res = sweep(cfg)
    print(f"{len(res.rows)} rows, {len(res.failures)} failed cells")
    for reg in res.regressions:
        print("%s slope %.4f intercept %.4f r2 %.4f n %d" % (reg["regime"], reg["slope"], reg["intercept"],
                                                             reg["r2"], reg["n_points"]))
    if res.rows:
        print("fitted C: " + " ".join(f"{b}={fitted_constant(res.rows, b):.4g}" for b in BOUNDS))
    if a.out:
        out = Path(a.out)
        _manifest(a, [out, out.with_suffix(".regression.json"), out.with_suffix(".failures.json")])
    return EXIT_OK if res.rows else EXIT_INVARIANT


def cmd_approx(a) -> int:
    ef = _eigenfunction(a)
    if ef.manifold != "torus":
        raise ConfigError("approx runs on lifts of torus eigenfunctions")
    lf = lift(ef)
    c = _center(a.center, ef.dim + 1)
    if c is None:
        c = np.append(_default_center(ef, a.seed), 0.0)
    res = approximate_by_truncation(lf.field(), c, a.r, a.n, policy=_policy(a))
    rng = np.random.default_rng(a.seed)
    pts = c + a.r * rng.uniform(-1, 1, (40, c.size)) / math.sqrt(c.size)
    harm = harmonicity_residual(res.head, (pts - c) / res.head.r_ref)
    print("relative_tail %.6e tail_sup %.6e head_degree %d parseval_defect %.3e harmonicity %.3e"
          % (res.relative_tail, res.tail_sup, res.head.kmax, res.parseval_defect, harm))
    if a.out:
        Path(a.out).write_text(json.dumps({
            "N_declared": a.n, "r": a.r, "center": c.tolist(), "relative_tail": res.relative_tail,
            "tail_sup": res.tail_sup, "parseval_defect": res.parseval_defect, "harmonicity": harm,
            "head": res.head.to_dict()}, indent=1) + "\n")
        _manifest(a, [a.out])
    return EXIT_OK if harm < 1e-8 else EXIT_INVARIANT


def cmd_dong(a) -> int:
    ef = _eigenfunction(a)
    state = DongState(ef, a.H)
    c = _center(a.center, ef.dim)
    if c is None:
        c = _default_center(ef, a.seed)
    radii = a.r_grid or list(np.geomspace(1.0 / math.sqrt(ef.lam), 0.3, 12))
    prof = dong_F_profile(state, c, radii, _policy(a))
    for r, t, F in zip(prof.r, prof.t, prof.F):
        print("%.6g %.6g %.6f" % (r, t, F))
    pts = random_points(ef, ef.dim, 200, np.random.default_rng(a.seed))
    chk = dong_log_q_laplacian_check(ef, pts, seed=a.seed)
    ok = chk.min_margin >= -1e-3 * ef.lam
    print("log q check: min margin %.3e over %d points (%d skipped)" % (chk.min_margin, chk.retained.size,
                                                                        chk.skipped.size))
    if a.out:
        prof.to_csv(a.out)
        _manifest(a, [a.out])
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_baselines(a) -> int:
    trig, markov = classical_baselines(a.n, _policy(a))
    print(_fmt(trig), _fmt(markov))
    if a.out:
        Path(a.out).write_text(json.dumps({"N": a.n, "trig": trig, "markov": markov}) + "\n")
        _manifest(a, [a.out])
    return EXIT_OK


def cmd_verify(a) -> int:
    from .verify import run_checks

    def show(res):
        print("%s  %-36s %s (%.2fs)" % ("PASS" if res.ok else "FAIL", res.name, res.detail, res.seconds))

    results = run_checks(a.quick, show)
    failed = [r for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} invariants hold")
    if a.out:
        Path(a.out).write_text(json.dumps([r.__dict__ for r in results], indent=1) + "\n")
        _manifest(a, [a.out])
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_ingest_check(a) -> int:
    sf = ingest(a.path, a.format)
    print(f"{len(sf)} points, domain {sf.domain}, dim {sf.dim}, band_limit {sf.band_limit}, "
          f"gradients {'yes' if sf.gradients is not None else 'no'}")
    if a.r is not None:
        c = _center(a.center, sf.dim)
        if c is None:
            c = sf.points.mean(axis=0) if sf.domain != "sphere" else sf.points[0]
        s = sup_norm(sf.to_field(), GeodesicBall(sf.domain, c, a.r), _policy(a)).sup
        print("sup %.6g" % s)
    return EXIT_OK


# ------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="blab", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"blab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("freq", parents=[common], help="frequency function of a harmonic expansion or sampled field",
                       description="Prints N(r) with 6 decimals (one radius) or 'r N' lines. Exit 1 if the "
                                   "profile decreases by more than the monotonicity tolerance.")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--expansion", help="HarmonicExpansion JSON file")
    src.add_argument("--field", help="sampled field (CSV/JSON with gradients)")
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--r-grid", type=_floats, help="comma list or geom:a:b:n")
    s.add_argument("--center", help="comma-separated center (default origin)")
    s.add_argument("--order", type=int, help="quadrature order (default from degree or band limit)")
    s.add_argument("--mono-tol", type=float, default=1e-4, help="monotonicity tolerance for sampled fields")
    s.add_argument("--exact", action="store_true", help="also print the closed-form frequency")
    s.set_defaults(func=cmd_freq)

    s = sub.add_parser("doubling", parents=[common], help="doubling index between B(r) and B(2r)")
    s.add_argument("--expansion", required=True)
    s.add_argument("--r", type=float, default=0.5)
    s.add_argument("--center")
    s.add_argument("--order", type=int)
    s.set_defaults(func=cmd_doubling)

    s = sub.add_parser("bernstein", parents=[common], help="gradient/sup ratio of an eigenfunction on one ball")
    _eigen_flags(s)
    s.add_argument("--r", type=float, default=0.1)
    s.add_argument("--center", help="default: a nodal point found from a seeded start")
    s.add_argument("--delta", type=float, default=1.0)
    s.set_defaults(func=cmd_bernstein)

    s = sub.add_parser("sweep", parents=[common], help="Bernstein ratios over (lambda, r, center)",
                       description="Failed cells are skipped and listed in <out>.failures.json; "
                                   "exit 1 only if every cell fails.")
    s.add_argument("--manifold", choices=("torus", "sphere"), default="torus")
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--lambda", dest="lambdas", type=_floats, help="eigenvalue list")
    s.add_argument("--degree", dest="degree_list", type=lambda t: [int(v) for v in _floats(t)],
                   help="sphere degree list")
    s.add_argument("--modes", type=int, default=1)
    s.add_argument("--r", type=float, default=0.1)
    s.add_argument("--r-grid", type=_floats)
    s.add_argument("--centers", choices=("nodal", "random"), default="nodal")
    s.add_argument("--n-centers", type=int, default=3)
    s.add_argument("--delta", type=float, default=1.0)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("approx", parents=[common], help="degree-5N truncation of a lifted torus eigenfunction",
                       description="Exit 1 if the fit is not resolved or the head fails the harmonicity check.")
    _eigen_flags(s)
    s.add_argument("--n", type=int, default=10, help="declared frequency N")
    s.add_argument("--r", type=float, default=0.3)
    s.add_argument("--center", help="point (x, t) of the lift; default a nodal point at t = 0")
    s.set_defaults(func=cmd_approx)

    s = sub.add_parser("dong", parents=[common], help="log-q growth profile and subharmonicity check (2-D)")
    _eigen_flags(s)
    s.add_argument("--r-grid", type=_floats)
    s.add_argument("--center")
    s.add_argument("--H", type=float, help="curvature bound (default 0 on tori, 1 on S^2)")
    s.set_defaults(func=cmd_dong)

    s = sub.add_parser("baselines", parents=[common], help="trigonometric and Chebyshev extremal ratios")
    s.add_argument("--n", type=int, default=5)
    s.set_defaults(func=cmd_baselines)

    s = sub.add_parser("verify", parents=[common], help="run the invariant suite; exit 1 on any failure")
    s.add_argument("--quick", action="store_true", help="smaller sizes")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("ingest-check", parents=[common], help="validate a sampled-field file")
    s.add_argument("path")
    s.add_argument("--format", choices=("csv", "json"))
    s.add_argument("--r", type=float, help="also report the sup over a ball of this radius")
    s.add_argument("--center")
    s.set_defaults(func=cmd_ingest_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotResolvedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (IngestError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BlabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
