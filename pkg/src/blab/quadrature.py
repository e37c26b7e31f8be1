"""Product quadrature rules on spheres and balls in R^d.

Sphere rules recurse over polar angles: S^(e-1) nodes are (sin t * S^(e-2) nodes, cos t)
with Gauss-Gegenbauer nodes in cos t (Gauss-Legendre when e = 3) and a uniform
azimuthal rule at the bottom. Ball rules add a radial Gauss-Jacobi rule for the
weight rho^(d-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import ConfigError


def sphere_area(d: int, radius: float = 1.0) -> float:
    """Surface measure of the sphere of given radius in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0) * radius ** (d - 1)


def ball_volume(d: int, radius: float = 1.0) -> float:
    return sphere_area(d, 1.0) / d * radius ** d


@dataclass(frozen=True)
class Quadrature:
    """Nodes (n, d), positive weights summing to ``measure``, exact to ``degree``."""

    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    measure: float

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def average(self, values) -> float:
        return float(np.dot(self.weights, values)) / self.measure

    def __len__(self) -> int:
        return self.weights.size


@lru_cache(maxsize=256)
def polar_nodes(e: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes in t = cos(polar angle) for level e, weight (1-t^2)^((e-3)/2), normalized to sum 1."""
    a = (e - 3) / 2.0
    t, w = roots_jacobi(order // 2 + 1, a, a)
    return t, w / w.sum()


@lru_cache(maxsize=128)
def _unit_sphere(d: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    # nodes on S^(d-1) and weights summing to 1
    n_az = order + 1
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    weights = np.full(n_az, 1.0 / n_az)
    for e in range(3, d + 1):
        t, w = polar_nodes(e, order)
        s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        lower = (s[:, None, None] * nodes[None, :, :]).reshape(-1, e - 1)
        nodes = np.concatenate([lower, np.repeat(t, nodes.shape[0])[:, None]], axis=1)
        weights = (w[:, None] * weights[None, :]).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def sphere_rule(d: int, order: int, center=None, radius: float = 1.0) -> Quadrature:
    """Rule on the sphere of given radius, exact for polynomials of degree <= order."""
    if d < 2:
        raise ConfigError(f"sphere rules need d >= 2, got {d}")
    if order < 1:
        raise ConfigError("quadrature order must be >= 1")
    if not radius > 0:
        raise ConfigError("radius must be positive")
    unit, w = _unit_sphere(d, int(order))
    area = sphere_area(d, radius)
    nodes = radius * unit
    if center is not None:
        nodes = nodes + np.asarray(center, dtype=float)[None, :]
    return Quadrature(nodes, area * w, int(order), area)


@lru_cache(maxsize=128)
def _radial(d: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    # nodes in (0, 1) and weights for int_0^1 rho^(d-1) f(rho) d rho
    n = order // 2 + 1
    s, w = roots_jacobi(n, 0.0, d - 1.0)
    return (1.0 + s) / 2.0, w / 2.0 ** d


def ball_rule(d: int, radial_order: int, sphere_order: int, r: float = 1.0, center=None) -> Quadrature:
    """Rule on the solid ball B(center, r); radial exactness in rho, spherical in angle."""
    if d < 2:
        raise ConfigError(f"ball rules need d >= 2, got {d}")
    if radial_order < 1 or sphere_order < 1:
        raise ConfigError("quadrature orders must be >= 1")
    if not r > 0:
        raise ConfigError("radius must be positive")
    rho, wr = _radial(d, int(radial_order))
    unit, ws = _unit_sphere(d, int(sphere_order))
    nodes = (r * rho[:, None, None] * unit[None, :, :]).reshape(-1, d)
    weights = (sphere_area(d) * r ** d * wr[:, None] * ws[None, :]).ravel()
    if center is not None:
        nodes = nodes + np.asarray(center, dtype=float)[None, :]
    return Quadrature(nodes, weights, int(min(radial_order, sphere_order)), ball_volume(d, r))
