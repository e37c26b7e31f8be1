"""Closed-form Laplace eigenfunctions on flat tori and round spheres, harmonic lifts,
finite-difference checks and Dong's quantities on surfaces.

Torus convention: period 2*pi in every coordinate, Delta = sum of second partials,
so phi(x) = sum a cos(m.x) + b sin(m.x) with |m|^2 = lambda.
Sphere convention: phi is the restriction to S^n of a degree-k harmonic polynomial
in R^(n+1), lambda = k(k+n-1); gradients are tangential projections.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from ._tables import dim_harmonics
from .errors import ConfigError, DomainError
from .fields import GeodesicBall, ScalarField, sphere_exp, tangent_basis
from .sphharm import HarmonicExpansion
from .supnorm import ResolutionPolicy, sup_norm


# ---------------------------------------------------------------- torus

@dataclass(frozen=True)
class TorusEigenfunction:
    d: int
    modes: np.ndarray  # (p, d) integer frequency vectors
    cos_coef: np.ndarray
    sin_coef: np.ndarray
    seed: int | None = None

    manifold = "torus"

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.modes, dtype=np.int64))
        a = np.asarray(self.cos_coef, dtype=float).ravel()
        b = np.asarray(self.sin_coef, dtype=float).ravel()
        if M.shape[0] == 0:
            raise ConfigError("a torus eigenfunction needs at least one mode")
        if M.shape[1] != self.d or a.size != M.shape[0] or b.size != M.shape[0]:
            raise ConfigError("mode vectors and coefficients have inconsistent shapes")
        norms = np.einsum("ij,ij->i", M, M)
        if np.any(norms != norms[0]):
            raise ConfigError(f"modes mix eigenvalues {sorted(set(norms.tolist()))}")
        if norms[0] == 0:
            raise ConfigError("the zero mode is not a positive-eigenvalue eigenfunction")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ConfigError("coefficients must be finite")
        for name, val in (("modes", M), ("cos_coef", a), ("sin_coef", b)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def lam(self) -> float:
        return float(self.modes[0] @ self.modes[0])

    @property
    def dim(self) -> int:
        return self.d

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.hypot(self.cos_coef, self.sin_coef)))

    def evaluate(self, points) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        ph = x @ self.modes.T.astype(float)
        c, s = np.cos(ph), np.sin(ph)
        v = c @ self.cos_coef + s @ self.sin_coef
        g = (s * -self.cos_coef + c * self.sin_coef) @ self.modes.astype(float)
        return v, g

    def field(self) -> ScalarField:
        return ScalarField(self.d, self.evaluate, "torus", math.sqrt(self.lam), False,
                           f"torus eigenfunction lambda={self.lam:g}", {"eigen": self})

    def to_spec(self) -> dict:
        rows = [[int(v) for v in m] + [float(a), float(b)]
                for m, a, b in zip(self.modes, self.cos_coef, self.sin_coef)]
        return {"manifold": "torus", "d_or_n": self.d, "modes_or_coefficients": rows, "seed": self.seed}


def lattice_vectors(d: int, lam: int) -> np.ndarray:
    """All integer vectors m in Z^d with |m|^2 = lam, one of each +-pair."""
    R = math.isqrt(int(lam))
    out = []
    for m in itertools.product(range(-R, R + 1), repeat=d):
        if sum(v * v for v in m) == lam:
            neg = tuple(-v for v in m)
            if neg not in out:
                out.append(m)
    return np.array(out, dtype=np.int64).reshape(-1, d)


def make_torus_eigenfunction(d: int, modes: Sequence, seed: int | None = None) -> TorusEigenfunction:
    """Build phi from ``modes``: entries are (m, a, b) triples or bare vectors m.

    Bare vectors get coefficients drawn from N(0, 1) with ``seed``.
    """
    if len(modes) == 0:
        raise ConfigError("nonempty mode list required")
    rng = np.random.default_rng(seed)
    M, A, B = [], [], []
    for entry in modes:
        if len(entry) == 3 and np.ndim(entry[0]) == 1:
            m, a, b = entry
        else:
            m, (a, b) = entry, rng.standard_normal(2)
        M.append(np.asarray(m, dtype=np.int64))
        A.append(float(a))
        B.append(float(b))
    return TorusEigenfunction(d, np.array(M), np.array(A), np.array(B), seed)


def random_torus_eigenfunction(d: int, lam: int, n_modes: int, seed: int) -> TorusEigenfunction:
    """Random combination of up to ``n_modes`` lattice modes with |m|^2 = lam."""
    vecs = lattice_vectors(d, lam)
    if vecs.shape[0] == 0:
        raise ConfigError(f"no lattice vectors with |m|^2 = {lam} in dimension {d}")
    rng = np.random.default_rng(seed)
    pick = rng.choice(vecs.shape[0], size=min(n_modes, vecs.shape[0]), replace=False)
    coef = rng.standard_normal((pick.size, 2))
    return TorusEigenfunction(d, vecs[np.sort(pick)], coef[:, 0], coef[:, 1], seed)


# ---------------------------------------------------------------- sphere

@dataclass(frozen=True)
class SphereEigenfunction:
    n: int  # the manifold is S^n in R^(n+1)
    k: int
    coefficients: np.ndarray
    seed: int | None = None

    manifold = "sphere"

    def __post_init__(self):
        if self.n < 1 or self.k < 0:
            raise ConfigError("need n >= 1 and k >= 0")
        c = np.asarray(self.coefficients, dtype=float).ravel()
        if c.size != dim_harmonics(self.n + 1, self.k):
            raise ConfigError(f"expected {dim_harmonics(self.n + 1, self.k)} coefficients, got {c.size}")
        if self.k == 0:
            raise ConfigError("degree 0 gives lambda = 0; a positive eigenvalue is required")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def lam(self) -> float:
        return float(self.k * (self.k + self.n - 1))

    @property
    def dim(self) -> int:
        return self.n + 1

    @cached_property
    def expansion(self) -> HarmonicExpansion:
        return HarmonicExpansion.from_blocks(self.n + 1, {self.k: self.coefficients})

    def evaluate(self, points) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        x = x / np.linalg.norm(x, axis=1, keepdims=True)
        v, G = self.expansion.evaluate(x)
        # tangential part; x.G = k v by Euler's identity
        return v, G - (self.k * v)[:, None] * x

    def field(self) -> ScalarField:
        return ScalarField(self.n + 1, self.evaluate, "sphere", math.sqrt(self.lam), False,
                           f"sphere eigenfunction k={self.k}", {"eigen": self})

    def to_spec(self) -> dict:
        return {"manifold": "sphere", "d_or_n": self.n,
                "modes_or_coefficients": {"k": self.k, "coefficients": self.coefficients.tolist()},
                "seed": self.seed}


def make_sphere_eigenfunction(n: int, k: int, coefficients) -> SphereEigenfunction:
    return SphereEigenfunction(n, k, np.asarray(coefficients, dtype=float))


def zonal_sphere_eigenfunction(n: int, k: int) -> SphereEigenfunction:
    """Zonal degree-k eigenfunction about the last axis, equal to 1 at the pole."""
    z = HarmonicExpansion.zonal(n + 1, k, 1.0)
    return SphereEigenfunction(n, k, z.block(k))


def random_sphere_eigenfunction(n: int, k: int, seed: int) -> SphereEigenfunction:
    rng = np.random.default_rng(seed)
    return SphereEigenfunction(n, k, rng.standard_normal(dim_harmonics(n + 1, k)), seed)


Eigenfunction = Union[TorusEigenfunction, SphereEigenfunction]


def eigenfunction_from_spec(spec: dict) -> Eigenfunction:
    kind = spec.get("manifold")
    body = spec.get("modes_or_coefficients")
    seed = spec.get("seed")
    if kind == "torus":
        d = int(spec["d_or_n"])
        modes = [(row[:d], row[d], row[d + 1]) if len(row) == d + 2 else row for row in body]
        return make_torus_eigenfunction(d, modes, seed)
    if kind == "sphere":
        return SphereEigenfunction(int(spec["d_or_n"]), int(body["k"]), np.asarray(body["coefficients"]), seed)
    raise ConfigError(f"unknown eigenfunction manifold {kind!r}")


def load_eigenfunction(path: str | Path) -> Eigenfunction:
    return eigenfunction_from_spec(json.loads(Path(path).read_text()))


def save_eigenfunction(ef: Eigenfunction, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ef.to_spec(), indent=1))


def riemannian_gradient_norm(ef: Eigenfunction, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    _, g = ef.evaluate(np.atleast_2d(x))
    out = np.linalg.norm(g, axis=1)
    return float(out[0]) if x.ndim == 1 else out


# ------------------------------------------------------- finite differences

def _frames(ef: Eigenfunction, x: np.ndarray) -> list[np.ndarray]:
    if ef.manifold == "torus":
        return [np.eye(ef.d)] * x.shape[0]
    return [tangent_basis(p / np.linalg.norm(p)) for p in x]


def _shift(ef: Eigenfunction, x: np.ndarray, V: np.ndarray) -> np.ndarray:
    if ef.manifold == "torus":
        return x[None, :] + V
    return sphere_exp(x / np.linalg.norm(x), V)


def fd_laplacian(fn, ef: Eigenfunction, points, h: float) -> np.ndarray:
    """Central second differences along geodesics through each point (trace of the Hessian).

    ``fn`` maps (m, ambient) points to values; geodesic second differences in
    normal coordinates give the Laplace-Beltrami operator on the sphere.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(x.shape[0])
    for i, (p, E) in enumerate(zip(x, _frames(ef, x))):
        V = np.concatenate([h * E, -h * E])
        f = fn(_shift(ef, p, V))
        f0 = fn(p[None, :])[0]
        m = E.shape[0]
        out[i] = np.sum(f[:m] + f[m:] - 2.0 * f0) / (h * h)
    return out


def fd_gradient(ef: Eigenfunction, points, h: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """(finite-difference, analytic) gradients in the tangent frame at each point."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    fd, an = [], []
    _, G = ef.evaluate(x)
    for p, E, g in zip(x, _frames(ef, x), G):
        f = ef.evaluate(_shift(ef, p, np.concatenate([h * E, -h * E])))[0]
        m = E.shape[0]
        fd.append((f[:m] - f[m:]) / (2.0 * h))
        an.append(E @ g)
    return np.array(fd), np.array(an)


def random_points(ef_or_manifold, dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    manifold = getattr(ef_or_manifold, "manifold", ef_or_manifold)
    if manifold == "torus":
        return rng.uniform(0.0, 2.0 * np.pi, size=(n, dim))
    x = rng.standard_normal((n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@dataclass(frozen=True)
class EigenCheck:
    residual: float  # max |Delta phi + lambda phi| / (lambda sup|phi|)
    gradient_error: float  # max relative analytic-vs-FD gradient error
    n_points: int


def eigen_check(ef: Eigenfunction, n_points: int = 50, seed: int = 0, h: float = 1e-4) -> EigenCheck:
    """Eigen-equation residual and gradient agreement at random points."""
    rng = np.random.default_rng(seed)
    x = random_points(ef, ef.dim, n_points, rng)
    sup = max(np.max(np.abs(ef.evaluate(random_points(ef, ef.dim, 4096, rng))[0])), 1e-300)
    lap = fd_laplacian(lambda p: ef.evaluate(p)[0], ef, x, h)
    v = ef.evaluate(x)[0]
    res = float(np.max(np.abs(lap + ef.lam * v)) / (ef.lam * sup))
    fd, an = fd_gradient(ef, x, h)
    gscale = math.sqrt(ef.lam) * sup
    gerr = float(np.max(np.linalg.norm(fd - an, axis=1)) / gscale)
    return EigenCheck(res, gerr, n_points)


# ---------------------------------------------------------------- lifts

def _tail_series(z: np.ndarray, K: int) -> np.ndarray:
    """sum_{k > K} z^k / k! without cancellation (assumes K + 1 > |z| for fast convergence)."""
    z = np.asarray(z, dtype=complex)
    lead = np.zeros_like(z)
    nz = z != 0
    lead[nz] = np.exp((K + 1) * np.log(z[nz]) - gammaln(K + 2))
    total = np.ones_like(z)
    term = np.ones_like(z)
    for j in range(1, 100_000):
        term = term * z / (K + 1 + j)
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return lead * total


@dataclass(frozen=True)
class LiftedField:
    """u(x, t) = phi(x) exp(sqrt(lambda) t), harmonic on M x R."""

    base: Eigenfunction
    lam: float

    @property
    def manifold(self) -> str:
        return self.base.manifold + "_lift"

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    def evaluate(self, points) -> tuple[np.ndarray, np.ndarray]:
        y = np.atleast_2d(np.asarray(points, dtype=float))
        v, g = self.base.evaluate(y[:, :-1])
        s = math.sqrt(self.lam)
        e = np.exp(s * y[:, -1])
        u = v * e
        return u, np.concatenate([g * e[:, None], (s * u)[:, None]], axis=1)

    def taylor_tail(self, points, center, K: int) -> np.ndarray:
        """Sum of the homogeneous parts of degree > K of u about ``center`` (torus lifts only).

        Each mode is Re[c exp(alpha.y)] with the null vector alpha = (i m, |m|), so the
        degree-k part about y0 is Re[c exp(alpha.y0) (alpha.v)^k / k!] and the tail is
        summed directly, free of the cancellation in u - head.
        """
        if self.base.manifold != "torus":
            raise DomainError("exact Taylor tails are available for torus lifts only")
        y = np.atleast_2d(np.asarray(points, dtype=float))
        y0 = np.asarray(center, dtype=float)
        v = y - y0
        ef = self.base
        s = math.sqrt(self.lam)
        out = np.zeros(y.shape[0])
        for m, a, b in zip(ef.modes.astype(float), ef.cos_coef, ef.sin_coef):
            c = (a - 1j * b) * np.exp(1j * (m @ y0[:-1]) + s * y0[-1])
            z = 1j * (v[:, :-1] @ m) + s * v[:, -1]
            out += np.real(c * _tail_series(z, K))
        return out

    def field(self) -> ScalarField:
        extras = {"eigen": self.base, "lambda": self.lam, "lift": self,
                  "harmonic": self.base.manifold == "torus"}
        if self.base.manifold == "torus":
            extras["taylor_tail"] = self.taylor_tail
        return ScalarField(self.dim, self.evaluate, self.manifold, math.sqrt(self.lam),
                           self.base.manifold == "torus", f"lift of {self.base.field().name}", extras)


def lift(ef: Eigenfunction) -> LiftedField:
    if not ef.lam > 0:
        raise ConfigError("the lift needs a positive eigenvalue")
    return LiftedField(ef, ef.lam)


def lift_laplacian_residual(lf: LiftedField, n_points: int = 50, seed: int = 0, h: float = 1e-4,
                            t_range: float = 0.5) -> float:
    """max |Delta u| / (lambda sup|phi| e^(sqrt(lambda) t)) by product-metric finite differences."""
    rng = np.random.default_rng(seed)
    ef = lf.base
    x = random_points(ef, ef.dim, n_points, rng)
    t = rng.uniform(-t_range, t_range, n_points)
    sup = max(np.max(np.abs(ef.evaluate(random_points(ef, ef.dim, 4096, rng))[0])), 1e-300)
    s = math.sqrt(lf.lam)
    worst = 0.0
    for p, tt in zip(x, t):
        def fx(q):
            return lf.evaluate(np.concatenate([q, np.full((q.shape[0], 1), tt)], axis=1))[0]

        lap_x = fd_laplacian(fx, ef, p[None, :], h)[0]
        ft = lf.evaluate(np.array([np.append(p, tt + h), np.append(p, tt), np.append(p, tt - h)]))[0]
        lap = lap_x + (ft[0] - 2.0 * ft[1] + ft[2]) / (h * h)
        worst = max(worst, abs(lap) / (lf.lam * sup * math.exp(s * tt)))
    return worst


# ---------------------------------------------------------------- Dong

def _require_surface(ef: Eigenfunction) -> None:
    two_d = (ef.manifold == "torus" and ef.d == 2) or (ef.manifold == "sphere" and ef.n == 2)
    if not two_d:
        raise DomainError("Dong's quantities are defined here on 2-D tori and S^2 only")


def dong_q(ef: Eigenfunction, x) -> np.ndarray | float:
    """q = |grad phi|^2 + (lambda / 2) phi^2."""
    _require_surface(ef)
    x = np.asarray(x, dtype=float)
    v, g = ef.evaluate(np.atleast_2d(x))
    q = np.einsum("ij,ij->i", g, g) + 0.5 * ef.lam * v * v
    return float(q[0]) if x.ndim == 1 else q


def dong_q_field(ef: Eigenfunction) -> ScalarField:
    _require_surface(ef)
    base = ef.field()

    def ev(pts):
        return dong_q(ef, pts), None

    return ScalarField(base.dim, ev, base.domain, 2.0 * math.sqrt(ef.lam), False, "dong q", {"eigen": ef})


def default_curvature(ef: Eigenfunction) -> float:
    return 0.0 if ef.manifold == "torus" else 1.0


@dataclass(frozen=True)
class LogQCheck:
    lam: float
    K: float
    bound: float  # -lambda + 2 min(K, 0)
    laplacians: np.ndarray  # FD Laplacian of log q at retained points
    retained: np.ndarray  # indices of retained points
    skipped: np.ndarray  # indices dropped by the q threshold

    @property
    def margins(self) -> np.ndarray:
        return self.laplacians - self.bound

    @property
    def min_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else math.inf


def dong_log_q_laplacian_check(ef: Eigenfunction, points, h_fd: float = 1e-3, K: float | None = None,
                               rel_threshold: float = 1e-8, seed: int = 0) -> LogQCheck:
    """Finite-difference Delta log q at ``points`` against -lambda + 2 min(K, 0)."""
    _require_surface(ef)
    K = default_curvature(ef) if K is None else float(K)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    q = dong_q(ef, x)
    rng = np.random.default_rng(seed)
    q_sup = max(float(q.max()), float(dong_q(ef, random_points(ef, ef.dim, 4096, rng)).max()))
    keep = np.flatnonzero(q >= rel_threshold * q_sup)
    skip = np.flatnonzero(q < rel_threshold * q_sup)
    lap = fd_laplacian(lambda p: np.log(dong_q(ef, p)), ef, x[keep], h_fd) if keep.size else np.empty(0)
    return LogQCheck(ef.lam, K, -ef.lam + 2.0 * min(K, 0.0), lap, keep, skip)


@dataclass(frozen=True)
class DongState:
    ef: Eigenfunction
    H: float | None = None  # bound on |sectional curvature|

    def __post_init__(self):
        _require_surface(self.ef)
        H = default_curvature(self.ef) if self.H is None else float(self.H)
        if H < 0:
            raise ConfigError("curvature bound H must be >= 0")
        object.__setattr__(self, "H", H)

    def rho0(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.H == 0.0:
            return r.copy()
        s = math.sqrt(self.H)
        return np.sinh(s * r) / s

    def t(self, r_grid, n_gauss: int = 8) -> np.ndarray:
        """t(r) = int_{r_grid[0]}^r d tau / rho0(tau), composite Gauss-Legendre."""
        r = np.asarray(r_grid, dtype=float)
        if r.size == 0 or r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise ConfigError("t(r) needs a positive strictly increasing radius grid")
        g, w = np.polynomial.legendre.leggauss(n_gauss)
        a, b = r[:-1], r[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes = mid[:, None] + half[:, None] * g[None, :]
        pieces = half * (w[None, :] / self.rho0(nodes)).sum(axis=1)
        return np.concatenate([[0.0], np.cumsum(pieces)])

    def q_field(self) -> ScalarField:
        return dong_q_field(self.ef)


@dataclass(frozen=True)
class DongProfile:
    r: np.ndarray
    t: np.ndarray
    M: np.ndarray
    F: np.ndarray
    second_diff: np.ndarray
    lam: float
    meta: dict = field(default_factory=dict)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "t", "M", "F", "second_diff"])
            for row in zip(self.r, self.t, self.M, self.F, self.second_diff):
                w.writerow(["%.17g" % v for v in row])

    def F_at(self, r: float) -> float:
        i = int(np.argmin(np.abs(self.r - r)))
        if abs(self.r[i] - r) > 1e-12 * max(1.0, r):
            raise ConfigError(f"radius {r} is not on the profile grid")
        return float(self.F[i])


def second_difference(t: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Nonuniform central second difference of F in t; NaN at the ends."""
    out = np.full(F.shape, np.nan)
    if F.size >= 3:
        d1 = np.diff(F) / np.diff(t)
        out[1:-1] = 2.0 * np.diff(d1) / (t[2:] - t[:-2])
    return out


def dong_F_profile(state: DongState, x0, r_grid, policy: ResolutionPolicy | None = None) -> DongProfile:
    """M(r) = running max of sup q over B(x0, r), F = log M, against t(r)."""
    ef = state.ef
    r = np.asarray(r_grid, dtype=float)
    t = state.t(r)
    qf = state.q_field()
    sups = np.array([sup_norm(qf, GeodesicBall(ef.manifold, x0, float(ri)), policy).sup for ri in r])
    M = np.maximum.accumulate(sups)
    F = np.log(M)
    return DongProfile(r, t, M, F, second_difference(t, F), ef.lam, {"H": state.H})


def single_mode_lift_frequency(m: float, rho: float) -> float:
    """Exact frequency of sin(m x_1) e^(m t) on the ball of radius rho about a nodal point (x_1 = 0).

    Degree-k parts have sphere mean squares (2 m rho)^(2k) / (2 (2k + 1)!), which sum to
    closed forms in s = 2 m rho: N = (s cosh s - sinh s) / (2 (sinh s - s)).
    """
    s = 2.0 * m * rho
    if s < 1e-3:
        return 1.0 + s * s / 15.0  # series; the closed form cancels badly near 0
    if s > 700:
        return 0.5 * (s - 1.0)
    return (s * math.cosh(s) - math.sinh(s)) / (2.0 * (math.sinh(s) - s))
