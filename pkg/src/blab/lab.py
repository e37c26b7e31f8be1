"""Bernstein ratios on geodesic balls, the bound zoo, polynomial L^p checks,
truncation of harmonic fields, classical baselines and the sweep harness."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import eval_chebyt, eval_chebyu

from .eigenfields import (
    Eigenfunction,
    make_torus_eigenfunction,
    random_points,
    random_sphere_eigenfunction,
    random_torus_eigenfunction,
    zonal_sphere_eigenfunction,
)
from .errors import BlabError, ConfigError, DomainError, NotResolvedError
from .fields import GeodesicBall, ScalarField, expansion_field
from .frequency import ball_values, default_order
from .quadrature import ball_rule
from .sphharm import HarmonicExpansion, project_to_expansion
from .supnorm import ResolutionPolicy, sup_norm

BOUNDS = ("global", "df", "dong", "main", "2d", "conj")
CSV_COLUMNS = (
    "manifold", "lambda", "r", "center_id", "grad_sup", "val_sup", "ratio",
    "b_global", "b_df", "b_dong", "b_main", "b_2d", "b_conj",
    "c_global", "c_df", "c_dong", "c_main", "c_2d", "c_conj",
    "resolution_h", "refine_depth",
)


def _log1(lam: float) -> float:
    # log factors floored at 1 so every bound stays positive down to lambda = 1
    return max(math.log(lam), 1.0)


def bound_values(lam: float, r: float, d: int, delta: float = 1.0) -> dict[str, float]:
    """All Bernstein-type bounds for a ball of radius r on a d-manifold."""
    s = math.sqrt(lam)
    L = _log1(lam) ** (2.0 + delta)
    return {
        "global": s,
        "df": lam ** ((d + 2) / 2.0) / r,
        "dong": max(s / r, lam ** 0.75),
        "main": max(s * L / r, lam * L),
        "2d": max(s / r, s * _log1(lam)),
        "conj": s / r,
    }


@dataclass(frozen=True)
class BernsteinReport:
    manifold: str
    center: np.ndarray
    r: float
    lam: float
    grad_sup: float
    val_sup: float
    bounds: dict
    delta: float = 1.0
    resolution_h: float = math.nan
    refine_depth: int = 0

    @property
    def ratio(self) -> float:
        return self.grad_sup / self.val_sup if self.val_sup > 0 else math.inf

    @property
    def constants(self) -> dict[str, float]:
        return {k: self.ratio / v for k, v in self.bounds.items()}

    def row(self, center_id: int | str = 0) -> dict:
        out = {"manifold": self.manifold, "lambda": self.lam, "r": self.r, "center_id": center_id,
               "grad_sup": self.grad_sup, "val_sup": self.val_sup, "ratio": self.ratio}
        out.update({f"b_{k}": self.bounds[k] for k in BOUNDS})
        out.update({f"c_{k}": self.constants[k] for k in BOUNDS})
        out.update({"resolution_h": self.resolution_h, "refine_depth": self.refine_depth})
        return out


def _surface_dim(ef: Eigenfunction) -> int:
    return ef.d if ef.manifold == "torus" else ef.n


def bernstein_ratio(ef: Eigenfunction, ball: GeodesicBall, policy: ResolutionPolicy | None = None,
                    delta: float = 1.0) -> BernsteinReport:
    """sup |grad_g phi| / sup |phi| over ``ball`` with every bound evaluated."""
    if ball.manifold != ef.manifold:
        raise DomainError(f"a {ball.manifold} ball for a {ef.manifold} eigenfunction")
    fld = ef.field()
    val = sup_norm(fld, ball, policy)
    grad = sup_norm(fld.gradient_norm_field(), ball, policy)
    return BernsteinReport(
        ef.manifold, ball.center, ball.radius, ef.lam, grad.sup, val.sup,
        bound_values(ef.lam, ball.radius, _surface_dim(ef), delta), delta,
        min(val.certificate["h_grid"], grad.certificate["h_grid"]),
        max(val.certificate["refine_depth"], grad.certificate["refine_depth"]),
    )


def _ball_for(fld: ScalarField, center, r: float) -> GeodesicBall:
    return GeodesicBall(fld.domain, np.asarray(center, dtype=float), r)


def growth_check(fld: ScalarField, center, r: float, L: float, policy: ResolutionPolicy | None = None) -> float:
    """sup over B(center, (1 + 1/L) r) divided by sup over B(center, r)."""
    if not L > 0:
        raise ConfigError("L must be positive")
    inner = sup_norm(fld, _ball_for(fld, center, r), policy).sup
    outer = sup_norm(fld, _ball_for(fld, center, (1.0 + 1.0 / L) * r), policy).sup
    if inner == 0.0:
        raise ConfigError("field vanishes on the inner ball")
    return outer / inner


# ------------------------------------------------------- harmonic polynomials

P_VALUES = (1, 2, math.inf)


def _check_p(p) -> float:
    p = float(p)
    if p not in P_VALUES:
        raise ConfigError(f"p must be one of 1, 2, inf; got {p}")
    return p


def _lp_ball(values: np.ndarray, q, p: float) -> float:
    if p == 1:
        return q.integrate(np.abs(values))
    return math.sqrt(q.integrate(values * values))


def _lp_order(N: int, p: float) -> int:
    # |P| is not a polynomial; p = 1 gets extra nodes for the kinks on the nodal set
    return 2 * N + 4 if p == 2 else 4 * N + 40


def polynomial_bernstein_lp(expansion: HarmonicExpansion, r: float, p=math.inf,
                            policy: ResolutionPolicy | None = None, order: int | None = None
                            ) -> tuple[float, float, float]:
    """(||grad P||_p, (N/r) ||P||_p, their ratio) on B(0, r) with N the top degree."""
    p = _check_p(p)
    N = expansion.kmax
    if N == 0 or expansion.is_zero:
        raise ConfigError("a nonconstant polynomial is required")
    fld = expansion_field(expansion)
    if p == math.inf:
        ball = GeodesicBall("euclidean", np.zeros(expansion.d), r)
        lhs = sup_norm(fld.gradient_norm_field(), ball, policy).sup
        norm = sup_norm(fld, ball, policy).sup
    else:
        o = order or _lp_order(N, p)
        q, v, g = ball_values(fld, np.zeros(expansion.d), r, o, o)
        gn = np.linalg.norm(g, axis=1)
        lhs, norm = _lp_ball(gn, q, p), _lp_ball(v, q, p)
    rhs = N / r * norm
    return lhs, rhs, lhs / rhs


def lp_growth_check(expansion: HarmonicExpansion, r: float, N: int, p=2,
                    policy: ResolutionPolicy | None = None, order: int | None = None) -> float:
    """||P||_p on B(0, (1 + 1/N) r) over ||P||_p on B(0, r) (integral norms, not averages)."""
    p = _check_p(p)
    if N < 1:
        raise ConfigError("N must be >= 1")
    R = (1.0 + 1.0 / N) * r
    if p == math.inf:
        fld = expansion_field(expansion)
        z = np.zeros(expansion.d)
        return sup_norm(fld, GeodesicBall("euclidean", z, R), policy).sup / \
            sup_norm(fld, GeodesicBall("euclidean", z, r), policy).sup
    o = order or _lp_order(max(expansion.kmax, 1), p)
    fld = expansion_field(expansion)
    out = []
    for rad in (R, r):
        q, v, _ = ball_values(fld, np.zeros(expansion.d), rad, o, o, want_grad=False)
        out.append(_lp_ball(v, q, p))
    return out[0] / out[1]


# ------------------------------------------------------------- truncation

@dataclass(frozen=True)
class TruncationResult:
    head: HarmonicExpansion  # centred at ``center``
    center: np.ndarray
    tail_sup: float
    relative_tail: float
    parseval_defect: float
    exact_tail: bool
    certificate: dict = field(default_factory=dict)


def approximate_by_truncation(fld: ScalarField, center, r: float, N_declared: int, fit_order: int | None = None,
                              policy: ResolutionPolicy | None = None, threshold: float = 1e-8,
                              head_factor: int = 5) -> TruncationResult:
    """Harmonic polynomial of degree <= 5N approximating a harmonic field near ``center``.

    The field is projected on the sphere of radius 1.5r; the head keeps degrees
    <= 5N. The tail sup is taken over B(center, (1 + 1/N) r), using the field's
    exact Taylor tail when it provides one (no cancellation), else field - head.
    relative_tail divides by the mean of |field| over B(center, r).
    """
    if not fld.extras.get("harmonic", False):
        raise ConfigError(f"{fld.name} is not declared harmonic")
    if fld.domain not in ("euclidean", "torus_lift"):
        raise DomainError("truncation needs a field in Euclidean coordinates")
    if N_declared < 1:
        raise ConfigError("N_declared must be >= 1")
    c = np.asarray(center, dtype=float)
    d = fld.dim
    K = head_factor * int(N_declared)
    rho = 1.5 * r
    Kc = K + max(10, K // 2)
    order = fit_order or 2 * Kc
    if order < 2 * Kc:
        raise ConfigError(f"fit_order must be >= {2 * Kc}")
    full, defect = project_to_expansion(fld.values, d, order // 2, rho, order, c)
    if defect > threshold:
        raise NotResolvedError(f"field not resolved by fit_order {order}: Parseval defect {defect:.3g}")
    head = HarmonicExpansion(d, tuple(t for t in full.terms if t[0] <= K), rho)

    R = (1.0 + 1.0 / N_declared) * r
    tail_fn = fld.extras.get("taylor_tail")
    if tail_fn is not None:
        def ev(pts):
            return tail_fn(pts, c, K), None
    else:
        head_fld = expansion_field(head, c)

        def ev(pts):
            return fld.values(pts) - head_fld.values(pts), None

    tail = ScalarField(d, ev, "euclidean", max(K + 1, 1) / R, True, "tail")
    res = sup_norm(tail, GeodesicBall("euclidean", c, R), policy)
    qo = default_order(fld, r)
    q = ball_rule(d, qo, qo, r, c)
    mean_abs = q.average(np.abs(fld.values(q.nodes)))
    cert = dict(res.certificate, fit_order=order, fit_radius=rho, head_degree=K)
    return TruncationResult(head, c, res.sup, res.sup / mean_abs, defect, tail_fn is not None, cert)


def harmonicity_residual(expansion: HarmonicExpansion, points) -> float:
    """max |Delta h| over max ||Hess h|| across ``points``, by fourth-order central differences
    of the analytic gradient.

    Normalizing by the largest Hessian keeps the check meaningful for fields whose
    size varies by many orders of magnitude over the sample (lifts grow like e^(sqrt(lambda) t)).
    The step scales with |p| / degree, the length over which a degree-k polynomial varies.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = expansion.d
    k = max(expansion.kmax, 1)
    I = np.eye(d)
    lap, hess = [], []
    for p in x:
        h = 1e-3 * max(np.linalg.norm(p), 1e-3 * expansion.r_ref) / k
        pts = np.concatenate([p + 2 * h * I, p + h * I, p - h * I, p - 2 * h * I])
        _, g = expansion.evaluate(pts)
        H = (-g[:d] + 8 * g[d:2 * d] - 8 * g[2 * d:3 * d] + g[3 * d:]) / (12.0 * h)
        lap.append(abs(np.trace(H)))
        hess.append(np.linalg.norm(0.5 * (H + H.T)))
    top = max(hess)
    return max(lap) / top if top > 0 else 0.0


# -------------------------------------------------------------- baselines

def classical_baselines(N: int, policy: ResolutionPolicy | None = None) -> tuple[float, float]:
    """(sup|T'|/sup|T| for T = sin(N theta), sup|T_N'|/sup|T_N| on [-1, 1]) via 1-D sup norms."""
    if N < 1:
        raise ConfigError("N must be >= 1")

    def trig(pts):
        return np.sin(N * pts[:, 0]), (N * np.cos(N * pts[:, 0]))[:, None]

    def cheb(pts):
        x = pts[:, 0]
        return eval_chebyt(N, x), (N * _cheb_u(N - 1, x))[:, None]

    ratios = []
    for ev, R, band in ((trig, math.pi, float(N)), (cheb, 1.0, float(N * N))):
        fld = ScalarField(1, ev, "euclidean", band, False, "baseline")
        ball = GeodesicBall("euclidean", np.zeros(1), R)
        val = sup_norm(fld, ball, policy).sup
        grad = sup_norm(fld.gradient_norm_field(), ball, policy).sup
        ratios.append(grad / val)
    return ratios[0], ratios[1]


def _cheb_u(n: int, x: np.ndarray) -> np.ndarray:
    # U_n is bounded by n + 1 on [-1, 1]; the endpoints are its extremes
    return eval_chebyu(n, np.clip(x, -1.0, 1.0))


# ----------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepConfig:
    manifold: str  # "torus" (T^d) or "sphere" (S^n)
    lambdas: tuple[float, ...]
    radii: tuple[float, ...]
    dim: int = 2
    centers: str | tuple = "nodal"  # "nodal", "random" or explicit points
    n_centers: int = 3
    family: str = "single"  # "single" mode/zonal or "random" combination
    n_modes: int = 4
    delta: float = 1.0
    policy: ResolutionPolicy = field(default_factory=ResolutionPolicy)
    out: str | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.manifold not in ("torus", "sphere"):
            raise ConfigError(f"sweeps run on 'torus' or 'sphere', not {self.manifold!r}")
        if len(self.lambdas) == 0:
            raise ConfigError("empty eigenvalue list")
        if len(self.radii) == 0:
            raise ConfigError("empty radius grid")
        if any(r <= 0 for r in self.radii):
            raise ConfigError("radii must be positive")
        limit = math.pi * (0.99 if self.manifold == "sphere" else 1.0)
        if max(self.radii) >= limit:
            raise ConfigError(f"radius {max(self.radii)} violates the injectivity constraint {limit:.4g}")
        if self.family not in ("single", "random"):
            raise ConfigError("family must be 'single' or 'random'")
        if isinstance(self.centers, str) and self.centers not in ("nodal", "random"):
            raise ConfigError("centers must be 'nodal', 'random' or explicit points")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "radii", tuple(float(v) for v in self.radii))


def sphere_degree(lam: float, n: int) -> int:
    k = int(round((-(n - 1) + math.sqrt((n - 1) ** 2 + 4 * lam)) / 2))
    if k < 1 or k * (k + n - 1) != lam:
        raise ConfigError(f"{lam:g} is not a sphere eigenvalue k(k+{n - 1})")
    return k


def sweep_eigenfunction(cfg: SweepConfig, lam: float) -> Eigenfunction:
    seed = cfg.seed * 1_000_003 + int(lam)
    if cfg.manifold == "torus":
        if cfg.family == "single":
            m = math.isqrt(int(lam))
            if m * m != lam:
                raise ConfigError(f"single-mode torus fields need a square eigenvalue, got {lam:g}")
            return make_torus_eigenfunction(cfg.dim, [((m,) + (0,) * (cfg.dim - 1), 0.0, 1.0)], seed)
        return random_torus_eigenfunction(cfg.dim, int(lam), cfg.n_modes, seed)
    k = sphere_degree(lam, cfg.dim)
    if cfg.family == "single":
        return zonal_sphere_eigenfunction(cfg.dim, k)
    return random_sphere_eigenfunction(cfg.dim, k, seed)


def nodal_point(ef: Eigenfunction, start: np.ndarray, iters: int = 60) -> np.ndarray:
    """Newton steps along the gradient to a zero of phi."""
    x = np.array(start, dtype=float)
    for _ in range(iters):
        v, g = ef.evaluate(x[None, :])
        gg = float(g[0] @ g[0])
        if gg == 0.0:
            break
        step = v[0] / gg * g[0]
        x = x - step
        if ef.manifold == "sphere":
            x = x / np.linalg.norm(x)
        if np.linalg.norm(step) < 1e-15:
            break
    return x


def sweep_centers(cfg: SweepConfig, ef: Eigenfunction, lam: float) -> list[np.ndarray]:
    if not isinstance(cfg.centers, str):
        return [np.asarray(c, dtype=float) for c in cfg.centers]
    rng = np.random.default_rng([cfg.seed, int(lam)])
    dim = ef.dim
    starts = random_points(ef, dim, cfg.n_centers, rng)
    if cfg.centers == "random":
        return list(starts)
    return [nodal_point(ef, s) for s in starts]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


@dataclass(frozen=True)
class SweepResult:
    rows: list
    failures: list
    regressions: list

    def ratios(self) -> np.ndarray:
        return np.array([r["ratio"] for r in self.rows])


def ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """(slope, intercept, r2) of ordinary least squares y ~ x."""
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return float(slope), float(intercept), r2


def _within_fit(groups: dict, regime: str) -> dict | None:
    # common slope with one intercept per group (demeaned OLS)
    xs, ys, means = [], [], []
    for key, pts in groups.items():
        if len(pts) < 2:
            continue
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        xs.append(x - x.mean())
        ys.append(y - y.mean())
        means.append((x.mean(), y.mean()))
    if not xs:
        return None
    x, y = np.concatenate(xs), np.concatenate(ys)
    if np.all(x == 0):
        return None
    slope, _, r2 = ols(x, y)
    intercept = float(np.mean([my - slope * mx for mx, my in means]))
    return {"regime": regime, "slope": slope, "intercept": intercept, "r2": r2, "n_points": int(x.size)}


def regressions(rows: Sequence[dict]) -> list[dict]:
    """Sub-wavelength slope of log ratio vs log(1/r) per eigenvalue, and log ratio vs log lambda
    at fixed r sqrt(lambda) in the large-ball regime."""
    sub: dict = {}
    fixed: dict = {}
    for row in rows:
        lam, r, ratio = row["lambda"], row["r"], row["ratio"]
        if not (ratio > 0 and math.isfinite(ratio)):
            continue
        scale = r * math.sqrt(lam)
        if scale <= 1.0:
            sub.setdefault((lam, row["center_id"]), []).append((math.log(1.0 / r), math.log(ratio)))
        else:
            fixed.setdefault((round(scale, 9), row["center_id"]), []).append((math.log(lam), math.log(ratio)))
    out = []
    for fit in (_within_fit(sub, "sub_wavelength"), _within_fit(fixed, "fixed_scale")):
        if fit is not None:
            out.append(fit)
    return out


def sweep(cfg: SweepConfig) -> SweepResult:
    """Bernstein reports over (lambda, r, center); rows ordered by that key for any thread count."""
    tasks = []
    for lam in cfg.lambdas:
        ef = sweep_eigenfunction(cfg, lam)
        for ri, r in enumerate(cfg.radii):
            for ci, c in enumerate(sweep_centers(cfg, ef, lam)):
                tasks.append((lam, r, ci, ef, c))

    def run(task):
        lam, r, ci, ef, c = task
        try:
            rep = bernstein_ratio(ef, GeodesicBall(ef.manifold, c, r), cfg.policy, cfg.delta)
            return rep.row(ci), None
        except BlabError as exc:
            return None, {"manifold": cfg.manifold, "lambda": lam, "r": r, "center_id": ci,
                          "error": type(exc).__name__, "message": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
        results = list(pool.map(run, tasks))
    rows = [row for row, _ in results if row is not None]
    failures = [f for _, f in results if f is not None]
    regs = regressions(rows)
    if cfg.out:
        write_sweep(cfg.out, rows, failures, regs)
    return SweepResult(rows, failures, regs)


def write_sweep(out: str | Path, rows, failures, regs) -> None:
    out = Path(out)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    out.with_suffix(".regression.json").write_text(json.dumps(regs, indent=1) + "\n")
    out.with_suffix(".failures.json").write_text(json.dumps(failures, indent=1) + "\n")


def fitted_constant(rows: Sequence[dict], bound: str) -> float:
    """Smallest C with ratio <= C * b_bound on every row."""
    if bound not in BOUNDS:
        raise ConfigError(f"unknown bound {bound!r}")
    return max(row[f"c_{bound}"] for row in rows)


def with_policy(cfg: SweepConfig, **kw) -> SweepConfig:
    return replace(cfg, policy=replace(cfg.policy, **kw))
