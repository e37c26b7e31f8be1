"""Numeric frequency function, doubling index and sup/L2 comparisons for scalar fields."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._product import degree_parts
from .errors import ConfigError, DomainError, UndefinedFrequencyError
from .fields import GeodesicBall, ScalarField, check_compatible
from .quadrature import Quadrature, ball_rule, sphere_rule
from .supnorm import ResolutionPolicy, sup_norm


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric matrix field A(x) with Lambda^-1 |xi|^2 <= A xi.xi <= Lambda |xi|^2."""

    d: int
    matrix: Callable[[np.ndarray], np.ndarray]  # (n, d) -> (n, d, d)
    ellipticity: float = 1.0
    identity_at_origin: bool = False
    name: str = "A"

    def __post_init__(self):
        if self.ellipticity < 1.0:
            raise ConfigError("ellipticity constant must be >= 1")

    @classmethod
    def identity(cls, d: int) -> "CoefficientField":
        def ident(pts):
            return np.broadcast_to(np.eye(d), (pts.shape[0], d, d))

        return cls(d, ident, 1.0, True, "Id")

    @classmethod
    def constant(cls, M) -> "CoefficientField":
        M = np.asarray(M, dtype=float)
        eig = np.linalg.eigvalsh(M)
        lam = float(max(eig.max(), 1.0 / eig.min()))
        return cls(M.shape[0], lambda pts: np.broadcast_to(M, (pts.shape[0],) + M.shape), lam,
                   bool(np.allclose(M, np.eye(M.shape[0]))), "const")

    @property
    def is_identity(self) -> bool:
        return self.name == "Id"

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.matrix(pts))

    def check_ellipticity(self, rng: np.random.Generator, n: int = 200, scale: float = 1.0) -> float:
        """Worst violation of the ellipticity bounds on random (x, xi); <= 0 means none."""
        x = rng.uniform(-scale, scale, size=(n, self.d))
        xi = rng.standard_normal((n, self.d))
        q = np.einsum("ni,nij,nj->n", xi, self(x), xi)
        s = np.einsum("ni,ni->n", xi, xi)
        lam = self.ellipticity
        return float(max(np.max(s / lam - q), np.max(q - lam * s)))


def mu_weight(A: CoefficientField, x, center=None) -> np.ndarray | float:
    """A(x) y.y / |y|^2 with y = x - center; 1 at y = 0 when A(0) = Id."""
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    c = np.zeros(pts.shape[1]) if center is None else np.asarray(center, dtype=float)
    y = pts - c
    n2 = np.einsum("ij,ij->i", y, y)
    if np.any(n2 == 0) and not A.identity_at_origin:
        raise ConfigError("mu is undefined at the center unless A(center) = Id")
    q = np.einsum("ni,nij,nj->n", y, A(pts), y)
    mu = np.where(n2 > 0, q / np.where(n2 > 0, n2, 1.0), 1.0)
    return float(mu[0]) if x.ndim == 1 else mu


def default_order(fld: ScalarField, r: float) -> int:
    """Quadrature order: exact for squared degree-K fields, else sized from the band limit."""
    deg = fld.extras.get("degree")
    if deg is not None:
        return 2 * int(deg) + 4
    if fld.band_limit is None:
        raise ConfigError(f"{fld.name}: give a quadrature order (no degree or band limit declared)")
    return 2 * (math.ceil(math.e * fld.band_limit * r) + 20)


def _orders(order) -> tuple[int, int]:
    if isinstance(order, (tuple, list)):
        return int(order[0]), int(order[1])
    return int(order), int(order)


def _check_ball(fld: ScalarField, center: np.ndarray, r: float) -> None:
    manifold = "torus_lift" if fld.domain == "torus_lift" else ("torus" if fld.domain == "torus" else "euclidean")
    if fld.domain in ("sphere", "sphere_lift"):
        raise DomainError("frequency quadrature needs Euclidean coordinates; sphere-valued fields are not supported")
    check_compatible(fld, GeodesicBall(manifold, center, r) if manifold == "euclidean" or r < math.pi
                     else GeodesicBall("euclidean", center, r))


@lru_cache(maxsize=8)
def _parts(expansion, order: int) -> tuple[np.ndarray, np.ndarray]:
    V, G = degree_parts(expansion, order)
    V.setflags(write=False)
    G.setflags(write=False)
    return V, G


def _expansion_about(fld: ScalarField, c: np.ndarray):
    # the product-rule fast path applies to expansion fields integrated about their own center
    exp = fld.extras.get("expansion")
    if exp is None:
        return None
    c0 = fld.extras.get("center")
    c0 = np.zeros(fld.dim) if c0 is None else c0
    return exp if np.array_equal(c0, c) else None


def ball_values(fld: ScalarField, c: np.ndarray, r: float, rad: int, sph: int,
                want_grad: bool = True) -> tuple[Quadrature, np.ndarray, np.ndarray | None]:
    """Ball rule plus field values (and gradients) at its nodes.

    Expansion fields are evaluated degree by degree on the unit-sphere nodes and
    scaled radially, which gives the same numbers as pointwise evaluation at a
    fraction of the cost.
    """
    q = ball_rule(fld.dim, rad, sph, r, c)
    exp = _expansion_about(fld, c)
    if exp is None:
        if want_grad:
            v, g = fld.value_and_grad(q.nodes)
            return q, v, g
        return q, fld.values(q.nodes), None
    V, G = _parts(exp, sph)
    rho = np.linalg.norm(q.nodes[:: V.shape[1]] - c, axis=1)
    k = np.arange(V.shape[0])
    v = ((rho[:, None] ** k) @ V).ravel()
    g = None
    if want_grad:
        pw = rho[:, None] ** np.maximum(k - 1, 0)
        g = np.tensordot(pw, G, axes=(1, 0)).reshape(-1, fld.dim)
    return q, v, g


def sphere_values(fld: ScalarField, c: np.ndarray, r: float, sph: int) -> tuple[Quadrature, np.ndarray]:
    q = sphere_rule(fld.dim, sph, c, r)
    exp = _expansion_about(fld, c)
    if exp is None:
        return q, fld.values(q.nodes)
    V, _ = _parts(exp, sph)
    return q, (r ** np.arange(V.shape[0])) @ V


def frequency_numeric(fld: ScalarField, A: CoefficientField | None = None, center=None, r: float = 1.0,
                      order=None) -> float:
    """r * int_B A grad u . grad u / int_{dB} mu u^2 by product quadrature.

    With A = Id a degree-k homogeneous harmonic polynomial has frequency exactly k.
    """
    d = fld.dim
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if not r > 0:
        raise ConfigError("radius must be positive")
    _check_ball(fld, c, r)
    A = A or CoefficientField.identity(d)
    rad, sph = _orders(order if order is not None else default_order(fld, r))
    qb, _, g = ball_values(fld, c, r, rad, sph)
    if A.is_identity:
        energy = qb.integrate(np.einsum("ij,ij->i", g, g))
    else:
        energy = qb.integrate(np.einsum("ni,nij,nj->n", g, A(qb.nodes), g))
    qs, u = sphere_values(fld, c, r, sph)
    mu = 1.0 if A.is_identity else mu_weight(A, qs.nodes, c)
    boundary = qs.integrate(mu * u * u)
    if not boundary > 0.0 or not np.any(u):
        raise UndefinedFrequencyError("boundary L2 mass vanishes; frequency undefined")
    return float(r * energy / boundary)


@dataclass(frozen=True)
class FrequencyProfile:
    center: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    weight: str
    orders: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ConfigError("profile radii must be strictly increasing")

    @property
    def max_violation(self) -> float:
        """Largest downward step N(r_i) - N(r_{i+1}) (0 if nondecreasing)."""
        if self.values.size < 2:
            return 0.0
        return float(max(0.0, np.max(self.values[:-1] - self.values[1:])))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["center_coords", "r", "N", "weight", "quad_order"])
            cc = " ".join(repr(float(v)) for v in self.center)
            for r, n, o in zip(self.radii, self.values, self.orders):
                w.writerow([cc, repr(float(r)), repr(float(n)), self.weight, int(o)])


def frequency_profile(fld: ScalarField, A: CoefficientField | None = None, center=None,
                      r_grid: Sequence[float] = (), order=None, threads: int = 1) -> FrequencyProfile:
    """Frequency at each radius of an increasing grid, with its monotonicity report."""
    radii = np.asarray(r_grid, dtype=float)
    if radii.size == 0:
        raise ConfigError("empty radius grid")
    c = np.zeros(fld.dim) if center is None else np.asarray(center, dtype=float)
    orders = [order if order is not None else default_order(fld, r) for r in radii]

    def one(i):
        return frequency_numeric(fld, A, c, float(radii[i]), orders[i])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        vals = np.array(list(pool.map(one, range(radii.size))))
    weight = "Id" if A is None or A.is_identity else A.name
    return FrequencyProfile(c, radii, vals, weight, np.array([_orders(o)[1] for o in orders]))


def ball_mean_square_numeric(fld: ScalarField, center, r: float, order=None) -> float:
    rad, sph = _orders(order if order is not None else default_order(fld, r))
    q, u, _ = ball_values(fld, np.asarray(center, dtype=float), r, rad, sph, want_grad=False)
    return q.average(u * u)


def doubling_index(fld: ScalarField, center=None, r: float = 1.0, order=None) -> float:
    """log2(mean u^2 over B(2r) / mean u^2 over B(r)) / 2, comparable to the frequency."""
    c = np.zeros(fld.dim) if center is None else np.asarray(center, dtype=float)
    _check_ball(fld, c, 2.0 * r)
    o2 = order if order is not None else default_order(fld, 2.0 * r)
    inner = ball_mean_square_numeric(fld, c, r, o2)
    outer = ball_mean_square_numeric(fld, c, 2.0 * r, o2)
    if inner <= 0.0:
        raise UndefinedFrequencyError("field vanishes on the inner ball; doubling index undefined")
    return 0.5 * math.log2(outer / inner)


@dataclass(frozen=True)
class SupL2Report:
    sup: float
    boundary_rms: float
    n_declared: float
    ratio: float


def sup_vs_boundary_l2(fld: ScalarField, center=None, r: float = 1.0, n_declared: float = 1.0,
                       policy: ResolutionPolicy | None = None, order=None) -> SupL2Report:
    """sup_B |u| / (N^(d/2) * sqrt(mean of u^2 over dB))."""
    d = fld.dim
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    s = sup_norm(fld, GeodesicBall("euclidean" if fld.domain == "euclidean" else fld.domain, c, r), policy).sup
    o = order if order is not None else default_order(fld, r)
    qs, u = sphere_values(fld, c, r, _orders(o)[1])
    rms = math.sqrt(qs.average(u * u))
    if rms == 0.0:
        raise UndefinedFrequencyError("boundary L2 mass vanishes")
    return SupL2Report(s, rms, float(n_declared), s / (n_declared ** (d / 2.0) * rms))
