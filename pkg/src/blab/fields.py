"""Scalar fields and geodesic balls on the model manifolds.

A ``ScalarField`` wraps a vectorized evaluator ``points -> (values, gradients)``.
Points are ambient coordinates:

* ``euclidean``: R^d
* ``torus``: R^d with 2*pi-periodic coordinates (flat metric)
* ``sphere``: unit vectors in R^(n+1); gradients are Riemannian (tangential)
* ``torus_lift``: R^(d+1), the last coordinate is the lift variable t
* ``sphere_lift``: (unit vector in R^(n+1), t)

A ``GeodesicBall`` maps tangent coordinates v (|v| <= r) at its center to points,
exactly along geodesics for every supported manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError

MANIFOLDS = ("euclidean", "torus", "sphere", "torus_lift", "sphere_lift")
INJECTIVITY_SLACK = 0.99

Evaluator = Callable[[np.ndarray], tuple[np.ndarray, "np.ndarray | None"]]


@dataclass(frozen=True)
class ScalarField:
    """A deterministic pointwise evaluator on one of the model domains.

    ``band_limit`` B declares that the field oscillates on length scales >= 1/B.
    ``subharmonic`` declares that |f| obeys the maximum principle on Euclidean
    balls (true for harmonic f and for |grad f| of harmonic f), so suprema over
    balls are attained on the boundary sphere.
    """

    dim: int
    evaluator: Evaluator
    domain: str = "euclidean"
    band_limit: float | None = None
    subharmonic: bool = False
    name: str = "field"
    # extra, field-specific hooks (exact local tails, degree, ...)
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.domain not in MANIFOLDS:
            raise ConfigError(f"unknown domain {self.domain!r}")
        if self.band_limit is not None and not self.band_limit > 0:
            raise ConfigError("band limit must be positive")

    def _points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise DomainError(f"{self.name}: points have dimension {pts.shape[1]}, expected {self.dim}")
        return pts

    def evaluate(self, points) -> tuple[np.ndarray, np.ndarray | None]:
        return self.evaluator(self._points(points))

    def values(self, points) -> np.ndarray:
        return self.evaluate(points)[0]

    def value_and_grad(self, points) -> tuple[np.ndarray, np.ndarray]:
        v, g = self.evaluate(points)
        if g is None:
            raise DomainError(f"{self.name} does not provide gradients")
        return v, g

    def map_values(self, fn: Callable[[np.ndarray, np.ndarray | None], np.ndarray], name: str,
                   band_factor: float = 1.0, subharmonic: bool = False) -> "ScalarField":
        """Derived value-only field x -> fn(values, grads)."""
        base = self

        def ev(pts):
            v, g = base.evaluator(pts)
            return fn(v, g), None

        bl = None if self.band_limit is None else self.band_limit * band_factor
        # hooks describing the original field (exact tails, expansions) do not carry over
        kept = {k: v for k, v in self.extras.items() if k in ("degree", "eigen", "lambda")}
        return ScalarField(self.dim, ev, self.domain, bl, subharmonic, name, kept)

    def gradient_norm_field(self) -> "ScalarField":
        """|grad f| as a field (subharmonic when f is harmonic)."""
        return self.map_values(
            lambda v, g: np.linalg.norm(g, axis=1) if g is not None else _no_grad(self.name),
            f"|grad {self.name}|",
            subharmonic=self.subharmonic,
        )


def _no_grad(name):
    raise DomainError(f"{name} does not provide gradients")


def expansion_field(expansion, center=None, name: str = "h") -> ScalarField:
    """ScalarField for a HarmonicExpansion, optionally recentred at ``center``."""
    c = None if center is None else np.asarray(center, dtype=float)

    def ev(pts):
        return expansion.evaluate(pts if c is None else pts - c)

    band = max(expansion.kmax, 1) / expansion.r_ref
    return ScalarField(expansion.d, ev, "euclidean", band, True, name,
                       {"degree": expansion.kmax, "expansion": expansion, "center": c, "harmonic": True})


def tangent_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis (n, n+1) of the tangent space of S^n at unit vector x."""
    x = np.asarray(x, dtype=float)
    q, _ = np.linalg.qr(np.concatenate([x[:, None], np.eye(x.size)], axis=1))
    E = q[:, 1:x.size].T
    return E


def sphere_exp(x: np.ndarray, V: np.ndarray) -> np.ndarray:
    """exp_x(V) for ambient tangent vectors V (m, n+1) at unit vector x."""
    t = np.linalg.norm(V, axis=1)
    safe = np.where(t > 0, t, 1.0)
    return np.cos(t)[:, None] * x[None, :] + (np.sin(t) / safe)[:, None] * V


def geodesic_distance(manifold: str, x, y) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if manifold == "sphere":
        return np.arccos(np.clip(np.sum(x * y, axis=1), -1.0, 1.0))
    if manifold == "sphere_lift":
        s = np.arccos(np.clip(np.sum(x[:, :-1] * y[:, :-1], axis=1), -1.0, 1.0))
        return np.hypot(s, x[:, -1] - y[:, -1])
    if manifold == "torus":
        dx = np.mod(x - y + np.pi, 2.0 * np.pi) - np.pi
        return np.linalg.norm(dx, axis=1)
    if manifold == "torus_lift":
        dx = np.mod(x[:, :-1] - y[:, :-1] + np.pi, 2.0 * np.pi) - np.pi
        return np.hypot(np.linalg.norm(dx, axis=1), x[:, -1] - y[:, -1])
    return np.linalg.norm(x - y, axis=1)


@dataclass(frozen=True)
class GeodesicBall:
    """Geodesic ball B(center, radius) on a model manifold."""

    manifold: str
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.manifold not in MANIFOLDS:
            raise ConfigError(f"unknown manifold {self.manifold!r}")
        c = np.asarray(self.center, dtype=float).ravel()
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not r > 0:
            raise ConfigError("ball radius must be positive")
        object.__setattr__(self, "radius", r)
        if self.manifold in ("sphere", "sphere_lift"):
            xi = c[:-1] if self.manifold == "sphere_lift" else c
            if abs(np.linalg.norm(xi) - 1.0) > 1e-9:
                raise DomainError("sphere ball center must be a unit vector")
            if self.manifold == "sphere_lift":
                c = np.concatenate([xi / np.linalg.norm(xi), c[-1:]])
            else:
                c = c / np.linalg.norm(c)
            object.__setattr__(self, "center", c)
            if r >= math.pi * INJECTIVITY_SLACK:
                raise DomainError(f"radius {r} exceeds the sphere's injectivity limit")
        if self.manifold in ("torus", "torus_lift") and r >= math.pi:
            raise DomainError(f"radius {r} is not below half the torus period")

    @property
    def tangent_dim(self) -> int:
        if self.manifold == "sphere":
            return self.center.size - 1
        if self.manifold == "sphere_lift":
            return self.center.size - 1
        return self.center.size

    @property
    def ambient_dim(self) -> int:
        return self.center.size

    @property
    def is_flat(self) -> bool:
        return self.manifold in ("euclidean", "torus", "torus_lift")

    def scaled(self, factor: float) -> "GeodesicBall":
        return GeodesicBall(self.manifold, self.center, self.radius * factor)

    def with_radius(self, r: float) -> "GeodesicBall":
        return GeodesicBall(self.manifold, self.center, r)

    def _frame(self) -> np.ndarray:
        if self.manifold == "sphere":
            return tangent_basis(self.center)
        if self.manifold == "sphere_lift":
            return tangent_basis(self.center[:-1])
        return np.eye(self.center.size)

    def to_points(self, V: np.ndarray) -> np.ndarray:
        """Map tangent coordinates (m, tangent_dim) to ambient points."""
        V = np.atleast_2d(np.asarray(V, dtype=float))
        if self.is_flat:
            return self.center[None, :] + V
        E = self._frame()
        if self.manifold == "sphere":
            return sphere_exp(self.center, V @ E)
        xi = sphere_exp(self.center[:-1], V[:, :-1] @ E)
        return np.concatenate([xi, self.center[-1] + V[:, -1:]], axis=1)

    def distance(self, points) -> np.ndarray:
        return geodesic_distance(self.manifold, points, self.center[None, :])


def check_compatible(field: ScalarField, ball: GeodesicBall) -> None:
    """Raise DomainError when the ball is not a region of the field's domain."""
    ok = {
        "euclidean": ("euclidean",),
        "torus": ("torus", "euclidean"),
        "sphere": ("sphere",),
        "torus_lift": ("torus_lift", "euclidean"),
        "sphere_lift": ("sphere_lift",),
    }[field.domain]
    if ball.manifold not in ok:
        raise DomainError(f"a {ball.manifold} ball is not a region of a {field.domain} field")
    if ball.ambient_dim != field.dim:
        raise DomainError(f"ball lives in dimension {ball.ambient_dim}, field in {field.dim}")
    if field.domain == "euclidean" and "domain_radius" in field.extras:
        R = field.extras["domain_radius"]
        c0 = field.extras.get("domain_center")
        c0 = np.zeros(field.dim) if c0 is None else c0
        if np.linalg.norm(ball.center - c0) + ball.radius > R * (1 + 1e-12):
            raise DomainError(f"ball of radius {ball.radius} leaves the field's domain of radius {R}")
