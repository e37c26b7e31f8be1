"""Grid-plus-refinement estimation of sup |f| over geodesic balls."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UnresolvedSupremumError
from .fields import GeodesicBall, ScalarField, check_compatible

_CHUNK = 200_000
REL_STOP = 1e-9


@dataclass(frozen=True)
class ResolutionPolicy:
    """Grid spacing is grid_factor * min(r, 1/B); refinement steps stop below refine_tol * min(r, 1/B)."""

    grid_factor: float = 1.0 / 8.0
    refine_tol: float = 1e-4
    force: bool = False
    n_candidates: int = 6
    max_moves: int = 400

    def __post_init__(self):
        if not 0 < self.grid_factor <= 1:
            raise ConfigError("grid_factor must be in (0, 1]")
        if not 0 < self.refine_tol < 1:
            raise ConfigError("refine_tol must be in (0, 1)")
        if self.n_candidates < 1:
            raise ConfigError("n_candidates must be >= 1")


@dataclass(frozen=True)
class SupResult:
    sup: float
    argmax: np.ndarray
    certificate: dict = field(default_factory=dict)


def grid_spacing(ball: GeodesicBall, band_limit: float | None, policy: ResolutionPolicy) -> tuple[float, float]:
    """(h_grid, effective band limit) for a ball and declared band limit."""
    r = ball.radius
    if band_limit is None:
        if not policy.force:
            raise UnresolvedSupremumError(
                "field declares no band limit; pass a band limit or force=True to grid at the ball scale"
            )
        band_limit = 1.0 / r
    return policy.grid_factor * min(r, 1.0 / band_limit), band_limit


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def boundary_points(m: int, r: float, h: float) -> np.ndarray:
    """Points on the sphere |v| = r in R^m with spacing at most about h."""
    if m == 1:
        return np.array([[-r], [r]])
    if m == 2:
        n = max(8, math.ceil(2.0 * math.pi * r / h))
        t = 2.0 * math.pi * np.arange(n) / n
        return r * np.stack([np.cos(t), np.sin(t)], axis=1)
    if m == 3:
        n = max(32, math.ceil(4.0 * math.pi * (r / h) ** 2))
        return r * _fibonacci_sphere(n)
    # cube faces projected radially (the projection does not increase distances)
    n1 = max(3, math.ceil(2.0 * r / h) + 1)
    g = np.linspace(-1.0, 1.0, n1)
    faces = []
    for axis in range(m):
        rest = np.array(list(itertools.product(g, repeat=m - 1)))
        for sign in (-1.0, 1.0):
            faces.append(np.insert(rest, axis, sign, axis=1))
    P = np.concatenate(faces)
    return r * P / np.linalg.norm(P, axis=1, keepdims=True)


def ball_grid(m: int, r: float, h: float) -> np.ndarray:
    """Cubic grid of spacing <= h restricted to |v| <= r, plus boundary samples."""
    n1 = max(3, math.ceil(2.0 * r / h) + 1)
    g = np.linspace(-r, r, n1)
    if m == 1:
        return g[:, None]
    mesh = np.stack(np.meshgrid(*([g] * m), indexing="ij"), axis=-1).reshape(-1, m)
    inside = mesh[np.einsum("ij,ij->i", mesh, mesh) <= r * r * (1 + 1e-12)]
    return np.concatenate([inside, boundary_points(m, r, h)])


def _abs_values(fld: ScalarField, ball: GeodesicBall, V: np.ndarray) -> np.ndarray:
    out = np.empty(V.shape[0])
    for s in range(0, V.shape[0], _CHUNK):
        out[s:s + _CHUNK] = np.abs(fld.values(ball.to_points(V[s:s + _CHUNK])))
    return out


def _pick_candidates(V: np.ndarray, vals: np.ndarray, n: int, sep: float) -> list[int]:
    order = np.argsort(-vals, kind="stable")
    picked: list[int] = []
    for idx in order[: max(50 * n, 200)]:
        if all(np.linalg.norm(V[idx] - V[p]) > sep for p in picked):
            picked.append(int(idx))
            if len(picked) == n:
                break
    return picked


def _project(V: np.ndarray, r: float, onto_sphere: bool) -> np.ndarray:
    nrm = np.linalg.norm(V, axis=1, keepdims=True)
    if onto_sphere:
        return r * V / np.where(nrm > 0, nrm, 1.0)
    return np.where(nrm > r, r * V / np.where(nrm > 0, nrm, 1.0), V)


def sup_norm(fld: ScalarField, ball: GeodesicBall, policy: ResolutionPolicy | None = None) -> SupResult:
    """Estimate sup |fld| over ``ball``.

    Coarse scan on a grid of spacing h = grid_factor * min(r, 1/B), then pattern
    search (step halving) from the best separated grid cells until the step is
    below refine_tol * min(r, 1/B). For fields flagged subharmonic on flat balls only the
    boundary sphere is scanned.
    """
    policy = policy or ResolutionPolicy()
    check_compatible(fld, ball)
    r = ball.radius
    h, band = grid_spacing(ball, fld.band_limit, policy)
    m = ball.tangent_dim
    boundary_only = fld.subharmonic and ball.is_flat and m >= 2
    V = boundary_points(m, r, h) if boundary_only else ball_grid(m, r, h)
    vals = _abs_values(fld, ball, V)
    n_evals = V.shape[0]

    dirs = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=m) if any(d)])
    if m > 4:
        dirs = np.concatenate([np.eye(m), -np.eye(m)])
    stop_step = policy.refine_tol * min(r, 1.0 / band)
    best_v, best_f, depth_max = V[int(np.argmax(vals))], float(vals.max()), 0
    for idx in _pick_candidates(V, vals, policy.n_candidates, 2.0 * h):
        v, f = V[idx].copy(), float(vals[idx])
        step, depth, moves, level_start = h, 0, 0, f
        # halve until the step is below refine_tol * min(r, 1/B) and a whole
        # step level gained less than REL_STOP relative
        while moves < policy.max_moves and step > 1e-15 * r:
            cand = _project(v[None, :] + step * dirs, r, boundary_only)
            cv = _abs_values(fld, ball, cand)
            n_evals += cand.shape[0]
            j = int(np.argmax(cv))
            if cv[j] > f:
                v, f = cand[j], float(cv[j])
                moves += 1
                continue
            if step < stop_step and f - level_start <= REL_STOP * f:
                break
            step *= 0.5
            depth += 1
            level_start = f
        if f > best_f:
            best_v, best_f = v, f
        depth_max = max(depth_max, depth)

    cert = {
        "h_grid": h,
        "band_limit": band,
        "refine_depth": depth_max,
        "n_grid": int(V.shape[0]),
        "n_evals": int(n_evals),
        "boundary_only": bool(boundary_only),
        "error_factor": 1.0 + m * (band * h) ** 2 / 8.0,
    }
    return SupResult(best_f, ball.to_points(best_v[None, :])[0], cert)
