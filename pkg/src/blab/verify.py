"""Cross-module invariant suite, run by ``blab verify``."""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from ._tables import basis_tables, dim_harmonics
from .eigenfields import (
    dong_log_q_laplacian_check,
    eigen_check,
    lift,
    lift_laplacian_residual,
    random_points,
    random_sphere_eigenfunction,
    random_torus_eigenfunction,
)
from .fields import GeodesicBall, ScalarField, expansion_field
from .frequency import doubling_index, frequency_numeric, frequency_profile
from .io import RunManifest, ingest, write_sampled_csv
from .lab import bound_values, classical_baselines
from .quadrature import ball_rule, ball_volume, sphere_rule
from .sphharm import (
    HarmonicExpansion,
    ball_mean_square,
    basis_values,
    exact_frequency,
    sphere_mean_square,
    zonal_kernel,
)
from .supnorm import sup_norm


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _gram(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for d, K in ((2, 8), (3, 6), (4, 5 if quick else 8)):
        q = sphere_rule(d, 2 * K + 2)
        Y = basis_values(d, K, q.nodes)
        G = (Y * q.weights[:, None]).T @ Y / q.weights.sum()
        worst = max(worst, float(np.abs(G - np.eye(G.shape[0])).max()))
    return worst < 1e-12, f"max |Gram - I| = {worst:.2e}"


def _zonal(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for d in (2, 3, 5):
        x, y = rng.standard_normal((2, d))
        x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
        offsets, _ = basis_tables(d, 6)
        Yx, Yy = basis_values(d, 6, np.stack([x, y]))
        for k in range(7):
            s = slice(offsets[d, k], offsets[d, k + 1])
            worst = max(worst, abs(float(Yx[s] @ Yy[s]) - zonal_kernel(d, k, float(x @ y))) / dim_harmonics(d, k))
    return worst < 1e-12, f"max reproducing-kernel error {worst:.2e}"


def _quadrature(quick: bool) -> tuple[bool, str]:
    # |x|^2 over the unit ball averages d/(d+2); the volume is exact
    worst = 0.0
    for d in (2, 3, 4):
        q = ball_rule(d, 8, 8, 1.3)
        worst = max(worst, abs(q.weights.sum() / ball_volume(d, 1.3) - 1.0))
        worst = max(worst, abs(q.average(np.sum(q.nodes ** 2, axis=1)) / (d / (d + 2.0) * 1.69) - 1.0))
    return worst < 1e-13, f"max relative error {worst:.2e}"


def _parseval(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    worst = 0.0
    for d in (2, 3, 4):
        h = HarmonicExpansion.random(d, 6, rng)
        q = sphere_rule(d, 16, None, 0.7)
        worst = max(worst, abs(q.average(h(q.nodes) ** 2) / sphere_mean_square(h, 0.7) - 1.0))
        qb = ball_rule(d, 16, 16, 0.7)
        worst = max(worst, abs(qb.average(h(qb.nodes) ** 2) / ball_mean_square(h, 0.7) - 1.0))
    return worst < 1e-12, f"max relative error {worst:.2e}"


def _frequency(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(4 if quick else 20):
        d = (2, 3, 4)[i % 3]
        h = HarmonicExpansion.random(d, int(rng.integers(1, 10 if quick else 20)), rng)
        f = expansion_field(h)
        for r in (0.5, 1.0):
            worst = max(worst, abs(frequency_numeric(f, r=r) - exact_frequency(h, r)))
    return worst < 1e-8, f"max |numeric - exact| = {worst:.2e}"


def _degree_identity(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    rng = np.random.default_rng(4)
    for d in (2, 3):
        for k in (1, 3, 7) if quick else (1, 3, 7, 15, 30):
            f = expansion_field(HarmonicExpansion.random(d, k, rng, kmin=k))
            worst = max(worst, abs(frequency_numeric(f, r=0.8) - k), abs(doubling_index(f, r=0.4) - k))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def _monotone(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(2 if quick else 6):
        f = expansion_field(HarmonicExpansion.random(3, 8, rng))
        prof = frequency_profile(f, r_grid=np.geomspace(0.05, 2.0, 20))
        worst = max(worst, prof.max_violation)
    return worst <= 1e-7, f"largest downward step {worst:.2e}"


def _doubling_bound(quick: bool) -> tuple[bool, str]:
    rng = np.random.default_rng(6)
    worst = -math.inf
    for _ in range(3 if quick else 10):
        h = HarmonicExpansion.random(3, 8, rng)
        f = expansion_field(h)
        r = float(rng.uniform(0.2, 0.8))
        worst = max(worst, doubling_index(f, r=r) - frequency_numeric(f, r=2 * r))
    return worst <= 1e-9, f"max doubling - N(2r) = {worst:.2e}"


def _sup(quick: bool) -> tuple[bool, str]:
    # sup of |a.x| over B(c, r) is |a.c| + |a| r
    rng = np.random.default_rng(7)
    worst = 0.0
    for d in (2, 3):
        a = rng.standard_normal(d)
        f = expansion_field(HarmonicExpansion.linear(d, a))
        c = rng.standard_normal(d)
        s = sup_norm(f, GeodesicBall("euclidean", c, 0.6)).sup
        exact = abs(float(a @ c)) + 0.6 * np.linalg.norm(a)
        worst = max(worst, abs(s - exact) / exact)
    return worst < 1e-8, f"max relative error {worst:.2e}"


def _eigen(quick: bool) -> tuple[bool, str]:
    efs = [random_torus_eigenfunction(2, 25, 4, 0), random_torus_eigenfunction(3, 14, 4, 1),
           random_sphere_eigenfunction(2, 6, 2), random_sphere_eigenfunction(3, 4, 3)]
    res = gerr = 0.0
    for ef in efs:
        chk = eigen_check(ef, 10 if quick else 50)
        res, gerr = max(res, chk.residual), max(gerr, chk.gradient_error)
    return res < 1e-6 and gerr < 1e-6, f"residual {res:.2e}, gradient error {gerr:.2e}"


def _lift(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for ef in (random_torus_eigenfunction(2, 25, 3, 0), random_sphere_eigenfunction(2, 5, 1)):
        worst = max(worst, lift_laplacian_residual(lift(ef), 8 if quick else 50))
    return worst < 1e-6, f"relative lift Laplacian {worst:.2e}"


def _dong(quick: bool) -> tuple[bool, str]:
    worst = math.inf
    for ef in (random_torus_eigenfunction(2, 25, 4, 0), random_sphere_eigenfunction(2, 5, 1)):
        pts = random_points(ef, ef.dim, 40 if quick else 200, np.random.default_rng(8))
        chk = dong_log_q_laplacian_check(ef, pts)
        worst = min(worst, chk.min_margin / ef.lam + 1e-3)
    return worst >= 0.0, f"min (margin / lambda + 1e-3) = {worst:.2e}"


def _baselines(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for n in (1, 5, 12) if quick else (1, 5, 12, 25, 50):
        trig, markov = classical_baselines(n)
        worst = max(worst, abs(trig - n) / n, abs(markov - n * n) / (n * n))
    return worst < 1e-6, f"max relative error {worst:.2e}"


def _bounds(quick: bool) -> tuple[bool, str]:
    # every bound is positive and the global one is independent of r
    ok = True
    for lam in (1.0, 25.0, 400.0):
        for r in (0.01, 0.3):
            b = bound_values(lam, r, 2)
            ok &= all(v > 0 for v in b.values())
            ok &= b["global"] == math.sqrt(lam)
            ok &= b["conj"] <= b["2d"] <= b["main"] + 1e-12
    return ok, "positivity and ordering of the bounds"


def _kernels(quick: bool) -> tuple[bool, str]:
    if kernels._compiled is None:
        return True, "compiled backend not built; python backend only"
    rng = np.random.default_rng(9)
    x = rng.standard_normal((50, 3))
    offsets, norms = basis_tables(3, 10)
    a = kernels.get_backend("python").solid_basis(x, 10, offsets, norms)
    b = kernels.get_backend("compiled").solid_basis(x, 10, offsets, norms)
    err = float(np.abs(a - b).max() / np.abs(a).max())
    return err < 1e-13, f"backend disagreement {err:.2e}"


def _io(quick: bool) -> tuple[bool, str]:
    n = 50
    g = 2 * np.pi * np.arange(n) / n
    P = np.stack([a.ravel() for a in np.meshgrid(g, g, indexing="ij")], axis=1)

    def fn(p):
        return np.sin(p[:, 0]) * np.cos(2 * p[:, 1])

    exact = ScalarField(2, lambda p: (fn(p), None), "torus", math.sqrt(5.0))
    ball = GeodesicBall("torus", np.array([6.0, 0.5]), 1.0)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "grid.csv"
        write_sampled_csv(path, "torus", P, fn(P), band_limit=math.sqrt(5.0))
        s = sup_norm(ingest(path).to_field(), ball).sup
        man = RunManifest({"check": "io"})
        man.record(path)
        digests_ok = not man.verify()
    t = sup_norm(exact, ball).sup
    err = abs(s - t) / t
    return err < 1e-3 and digests_ok, f"round-trip sup error {err:.2e}, digests {'ok' if digests_ok else 'BAD'}"


CHECKS: list[tuple[str, Callable[[bool], tuple[bool, str]]]] = [
    ("quadrature exactness", _quadrature),
    ("basis orthonormality", _gram),
    ("zonal reproducing identity", _zonal),
    ("Parseval identities", _parseval),
    ("frequency quadrature vs closed form", _frequency),
    ("degree identity", _degree_identity),
    ("frequency monotonicity", _monotone),
    ("doubling vs frequency", _doubling_bound),
    ("sup norm of linear fields", _sup),
    ("eigen residual and gradients", _eigen),
    ("lift harmonicity", _lift),
    ("log q subharmonicity", _dong),
    ("classical baselines", _baselines),
    ("bound values", _bounds),
    ("kernel backends agree", _kernels),
    ("ingest round trip and digests", _io),
]


def run_checks(quick: bool = False, report: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn(quick)
        except Exception as exc:  # a crash is a failed invariant
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail, time.perf_counter() - t0)
        if report is not None:
            report(res)
        results.append(res)
    return results
