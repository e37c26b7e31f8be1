"""Real spherical harmonics in R^d and harmonic expansions with closed-form norms.

Basis functions are normalized to unit *mean* square on the unit sphere, so
for h(x) = sum_{k,m} a_{k,m} Y_{k,m}(x/|x|) |x|^k and A_k = sum_m a_{k,m}^2:

    mean of h^2 over the sphere of radius rho  = sum_k A_k rho^(2k)
    mean of h^2 over the ball of radius r      = sum_k d/(2k+d) A_k r^(2k)
    frequency at radius r                      = sum_k k A_k r^(2k) / sum_k A_k r^(2k)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.special import eval_chebyt, eval_gegenbauer

from . import kernels
from ._tables import basis_tables, dim_harmonics
from .errors import ConfigError, UndefinedFrequencyError

__all__ = [
    "HarmonicExpansion",
    "dim_harmonics",
    "zonal_kernel",
    "evaluate",
    "sphere_mean_square",
    "ball_mean_square",
    "exact_frequency",
    "truncate",
    "tail_majorant",
    "basis_values",
    "basis_index",
    "pointwise_basis_bound",
    "project_to_expansion",
]


def basis_index(d: int, k: int, m: int) -> int:
    """Flat index of Y_{k,m} in the dense coefficient layout."""
    if not 0 <= m < dim_harmonics(d, k):
        raise ConfigError(f"basis index m={m} out of range for degree {k} in R^{d}")
    offsets, _ = basis_tables(d, k)
    return int(offsets[d, k]) + m


def basis_values(d: int, kmax: int, points) -> np.ndarray:
    """Solid harmonics |x|^k Y_{k,m}(x/|x|) for all k <= kmax at the given points.

    On unit vectors this is the spherical-harmonic basis itself. Columns follow
    the dense layout (degree blocks in increasing order).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != d:
        raise ConfigError(f"points have dimension {pts.shape[1]}, expected {d}")
    offsets, norms = basis_tables(d, kmax)
    return kernels.solid_basis(pts, kmax, offsets, norms)


def zonal_kernel(d: int, k: int, cosine: float) -> float:
    """Reproducing kernel Z_k(xi, eta) of H_k as a function of xi . eta.

    Normalized for the average-over-sphere pairing, so Z_k(1) = dim H_k.
    """
    if d < 2 or k < 0:
        raise ConfigError("need d >= 2 and k >= 0")
    if abs(cosine) > 1.0 + 1e-12:
        raise ConfigError(f"cosine {cosine} outside [-1, 1]")
    t = float(np.clip(cosine, -1.0, 1.0))
    if k == 0:
        return 1.0
    if d == 2:
        return 2.0 * float(eval_chebyt(k, t))
    alpha = (d - 2) / 2.0
    return dim_harmonics(d, k) * float(eval_gegenbauer(k, alpha, t) / eval_gegenbauer(k, alpha, 1.0))


@dataclass(frozen=True)
class HarmonicExpansion:
    """h(x) = sum a_{k,m} Y_{k,m}(x/|x|) |x|^k in R^d.

    ``terms`` holds (k, m, a_{k,m}) triples; each (k, m) appears once.
    ``r_ref`` is the length scale the coefficients were fitted at; evaluation
    works in units of r_ref to keep |x|^k near 1 for high degrees.
    """

    d: int
    terms: tuple[tuple[int, int, float], ...] = ()
    r_ref: float = 1.0

    def __post_init__(self):
        if self.d < 2:
            raise ConfigError(f"ambient dimension must be >= 2, got {self.d}")
        if not self.r_ref > 0:
            raise ConfigError("r_ref must be positive")
        seen = set()
        clean = []
        for k, m, a in self.terms:
            k, m, a = int(k), int(m), float(a)
            if k < 0 or not 0 <= m < dim_harmonics(self.d, k):
                raise ConfigError(f"invalid basis index (k={k}, m={m}) for d={self.d}")
            if (k, m) in seen:
                raise ConfigError(f"duplicate term (k={k}, m={m})")
            if not math.isfinite(a):
                raise ConfigError(f"non-finite coefficient for (k={k}, m={m})")
            seen.add((k, m))
            clean.append((k, m, a))
        object.__setattr__(self, "terms", tuple(sorted(clean)))

    # construction

    @classmethod
    def from_dense(cls, d: int, coef, r_ref: float = 1.0, drop_zeros: bool = True) -> "HarmonicExpansion":
        """Build from a dense coefficient vector in basis layout."""
        coef = np.asarray(coef, dtype=float)
        kmax = 0
        while basis_tables(d, kmax)[0][d, kmax + 1] < coef.size:
            kmax += 1
        offsets, _ = basis_tables(d, kmax)
        if offsets[d, kmax + 1] != coef.size:
            raise ConfigError(f"coefficient length {coef.size} is not a full set of degree blocks")
        terms = []
        for k in range(kmax + 1):
            for m in range(dim_harmonics(d, k)):
                a = coef[offsets[d, k] + m]
                if a != 0.0 or not drop_zeros:
                    terms.append((k, m, float(a)))
        return cls(d, tuple(terms), r_ref)

    @classmethod
    def from_blocks(cls, d: int, blocks: dict[int, Iterable[float]], r_ref: float = 1.0) -> "HarmonicExpansion":
        """Build from {degree: coefficients of that degree block}."""
        terms = []
        for k, vals in blocks.items():
            vals = list(vals)
            if len(vals) != dim_harmonics(d, k):
                raise ConfigError(f"degree {k} block needs {dim_harmonics(d, k)} coefficients, got {len(vals)}")
            terms.extend((k, m, a) for m, a in enumerate(vals) if a != 0.0)
        return cls(d, tuple(terms), r_ref)

    @classmethod
    def constant(cls, d: int, c: float) -> "HarmonicExpansion":
        return cls(d, ((0, 0, c),))

    @classmethod
    def linear(cls, d: int, vector) -> "HarmonicExpansion":
        """The linear function x -> vector . x."""
        v = np.asarray(vector, dtype=float)
        B = basis_values(d, 1, np.eye(d))[:, 1:]  # B[i, m] = Y_{1,m}(e_i)
        a = np.linalg.solve(B, v)
        return cls(d, tuple((1, m, float(am)) for m, am in enumerate(a) if am != 0.0))

    @classmethod
    def zonal(cls, d: int, k: int, scale: float = 1.0) -> "HarmonicExpansion":
        """Degree-k harmonic symmetric about the last axis, equal to ``scale`` at e_d."""
        if d == 2:
            # Re z^k is symmetric about the first axis in the plane; use it as the d=2 analogue
            return cls(d, ((k, 0, scale / math.sqrt(2.0) if k else scale),))
        return cls(d, ((k, 0, scale / math.sqrt(dim_harmonics(d, k))),))

    @classmethod
    def random(
        cls,
        d: int,
        kmax: int,
        rng: np.random.Generator,
        kmin: int = 0,
        degrees: Iterable[int] | None = None,
        r_ref: float = 1.0,
    ) -> "HarmonicExpansion":
        """Gaussian coefficients on every basis function of the selected degrees."""
        ks = range(kmin, kmax + 1) if degrees is None else degrees
        terms = []
        for k in ks:
            for m in range(dim_harmonics(d, k)):
                terms.append((k, m, float(rng.standard_normal())))
        return cls(d, tuple(terms), r_ref)

    # structure

    @cached_property
    def kmax(self) -> int:
        return max((k for k, _, _ in self.terms), default=0)

    @cached_property
    def kmin(self) -> int:
        return min((k for k, _, a in self.terms if a != 0.0), default=0)

    @property
    def degrees(self) -> list[int]:
        return sorted({k for k, _, a in self.terms if a != 0.0})

    @property
    def is_zero(self) -> bool:
        return all(a == 0.0 for _, _, a in self.terms)

    @cached_property
    def dense(self) -> np.ndarray:
        offsets, _ = basis_tables(self.d, self.kmax)
        out = np.zeros(int(offsets[self.d, self.kmax + 1]))
        for k, m, a in self.terms:
            out[offsets[self.d, k] + m] = a
        out.setflags(write=False)
        return out

    @cached_property
    def degree_norms(self) -> np.ndarray:
        """A_k = sum_m a_{k,m}^2 for k = 0..kmax."""
        A = np.zeros(self.kmax + 1)
        for k, _, a in self.terms:
            A[k] += a * a
        A.setflags(write=False)
        return A

    def block(self, k: int) -> np.ndarray:
        offsets, _ = basis_tables(self.d, max(k, self.kmax))
        if k > self.kmax:
            return np.zeros(dim_harmonics(self.d, k))
        return self.dense[offsets[self.d, k]:offsets[self.d, k + 1]].copy()

    # arithmetic

    def __add__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        if not isinstance(other, HarmonicExpansion) or other.d != self.d:
            return NotImplemented
        acc: dict[tuple[int, int], float] = {}
        for k, m, a in self.terms + other.terms:
            acc[(k, m)] = acc.get((k, m), 0.0) + a
        return HarmonicExpansion(self.d, tuple((k, m, a) for (k, m), a in acc.items()), self.r_ref)

    def scaled(self, c: float) -> "HarmonicExpansion":
        return HarmonicExpansion(self.d, tuple((k, m, c * a) for k, m, a in self.terms), self.r_ref)

    def with_r_ref(self, r_ref: float) -> "HarmonicExpansion":
        return HarmonicExpansion(self.d, self.terms, r_ref)

    # evaluation

    def evaluate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Values (n,) and gradients (n, d) at points of shape (n, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            raise ConfigError(f"points have dimension {pts.shape[1]}, expected {self.d}")
        kmax = self.kmax
        offsets, norms = basis_tables(self.d, kmax)
        coef = np.array(self.dense)
        if self.r_ref != 1.0:
            for k in range(1, kmax + 1):
                coef[offsets[self.d, k]:offsets[self.d, k + 1]] *= self.r_ref ** k
            pts = pts / self.r_ref
        vals, grads = kernels.eval_expansion(pts, coef, kmax, offsets, norms)
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(grads))):
            raise OverflowError(f"expansion of degree {kmax} overflowed; evaluate closer to |x| ~ r_ref")
        if self.r_ref != 1.0:
            grads = grads / self.r_ref
        return vals, grads

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)[0]

    # serialization

    def to_dict(self) -> dict:
        return {"d": self.d, "r_ref": self.r_ref, "terms": [[k, m, a] for k, m, a in self.terms]}

    @classmethod
    def from_dict(cls, data: dict) -> "HarmonicExpansion":
        try:
            return cls(int(data["d"]), tuple(tuple(t) for t in data["terms"]), float(data.get("r_ref", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed expansion record: {exc}") from exc

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, path: str | Path) -> "HarmonicExpansion":
        return cls.from_dict(json.loads(Path(path).read_text()))


def evaluate(expansion: HarmonicExpansion, x) -> tuple[np.ndarray, np.ndarray]:
    """Value and gradient at a single point (returns scalars/vectors) or a batch."""
    x = np.asarray(x, dtype=float)
    vals, grads = expansion.evaluate(np.atleast_2d(x))
    if x.ndim == 1:
        return float(vals[0]), grads[0]
    return vals, grads


def _log_weights(expansion: HarmonicExpansion, radius: float) -> tuple[np.ndarray, np.ndarray]:
    A = expansion.degree_norms
    ks = np.nonzero(A > 0)[0]
    return ks, np.log(A[ks]) + 2.0 * ks * math.log(radius)


def sphere_mean_square(expansion: HarmonicExpansion, rho: float) -> float:
    """Mean of h^2 over the sphere of radius rho (closed form)."""
    if not rho > 0:
        raise ConfigError("radius must be positive")
    A = expansion.degree_norms
    k = np.arange(A.size)
    return float(np.sum(A * rho ** (2.0 * k)))


def ball_mean_square(expansion: HarmonicExpansion, r: float) -> float:
    """Mean of h^2 over the ball of radius r (closed form)."""
    if not r > 0:
        raise ConfigError("radius must be positive")
    A = expansion.degree_norms
    k = np.arange(A.size)
    d = expansion.d
    return float(np.sum(d / (2.0 * k + d) * A * r ** (2.0 * k)))


def exact_frequency(expansion: HarmonicExpansion, r: float) -> float:
    """sum_k k A_k r^(2k) / sum_k A_k r^(2k), evaluated in log space."""
    if not r > 0:
        raise ConfigError("radius must be positive")
    ks, logw = _log_weights(expansion, r)
    if ks.size == 0:
        raise UndefinedFrequencyError("frequency of the zero function is undefined")
    w = np.exp(logw - logw.max())
    return float(np.dot(ks, w) / w.sum())


def truncate(expansion: HarmonicExpansion, K: int) -> tuple[HarmonicExpansion, HarmonicExpansion]:
    """Split into (degrees <= K, degrees > K)."""
    if K < 0:
        raise ConfigError("truncation degree must be >= 0")
    head = tuple(t for t in expansion.terms if t[0] <= K)
    tail = tuple(t for t in expansion.terms if t[0] > K)
    return (
        HarmonicExpansion(expansion.d, head, expansion.r_ref),
        HarmonicExpansion(expansion.d, tail, expansion.r_ref),
    )


def tail_majorant(expansion: HarmonicExpansion, K: int, rho: float) -> float:
    """Upper bound for sup over B(0, rho) of the degree > K part.

    Uses |sum_m a_{k,m} Y_{k,m}| <= sqrt(A_k) sqrt(dim H_k) (reproducing kernel).
    """
    A = expansion.degree_norms
    total = 0.0
    for k in range(K + 1, A.size):
        if A[k] > 0:
            total += math.sqrt(A[k] * dim_harmonics(expansion.d, k)) * rho ** k
    return total


def pointwise_basis_bound(d: int, kmax: int, unit_points) -> tuple[np.ndarray, float]:
    """Max |Y_{k,m}| over the points and m, per degree, and the fitted C in C k^((d-2)/2).

    The fit takes degrees k >= 1.
    """
    B = np.abs(basis_values(d, kmax, unit_points))
    offsets, _ = basis_tables(d, kmax)
    peaks = np.array([B[:, offsets[d, k]:offsets[d, k + 1]].max() for k in range(kmax + 1)])
    ks = np.arange(1, kmax + 1)
    C = float(np.max(peaks[1:] / ks ** ((d - 2) / 2.0))) if kmax >= 1 else float(peaks[0])
    return peaks, C


def _project_generic(u: np.ndarray, unit: np.ndarray, w: np.ndarray, d: int, kmax: int) -> np.ndarray:
    ncoef = basis_tables(d, kmax)[0][d, kmax + 1]
    chunk = max(1, 4_000_000 // int(ncoef))
    b = np.zeros(int(ncoef))
    for s in range(0, unit.shape[0], chunk):
        b += basis_values(d, kmax, unit[s:s + chunk]).T @ (w[s:s + chunk] * u[s:s + chunk])
    return b


def _project_fft3(u: np.ndarray, order: int, kmax: int) -> np.ndarray:
    # product rule in R^3: rings of constant polar node, uniform azimuth
    from .quadrature import _unit_sphere

    unit, w = _unit_sphere(3, order)
    n_az = order + 1
    n_pol = unit.shape[0] // n_az
    ring_w = w.reshape(n_pol, n_az)[:, 0] * n_az
    F = np.fft.rfft(u.reshape(n_pol, n_az), axis=1) / n_az  # sum u e^{-i j phi} / n_az
    t = unit[::n_az, 2]
    merid = np.stack([np.sqrt(np.clip(1.0 - t * t, 0.0, None)), np.zeros_like(t), t], axis=1)
    M = basis_values(3, kmax, merid)  # cos entries carry the polar profile at phi = 0
    offsets, _ = basis_tables(3, kmax)
    b = np.zeros(M.shape[1])
    for j in range(kmax + 1):
        cos_part = ring_w * F[:, j].real
        sin_part = -ring_w * F[:, j].imag
        for k in range(j, kmax + 1):
            col = offsets[3, k] + offsets[2, j]
            prof = M[:, col]
            b[col] = prof @ cos_part
            if j > 0:
                b[col + 1] = prof @ sin_part
    return b


def project_to_expansion(fn, d: int, kmax: int, rho: float, order: int, center=None
                         ) -> tuple[HarmonicExpansion, float]:
    """Project ``fn`` (points -> values) onto solid harmonics of degree <= kmax on the sphere |x - c| = rho.

    Coefficients are sphere averages of fn * Y_{k,m}; the returned expansion is
    centred at the origin (callers shift points by ``center``) and uses r_ref = rho.
    The second output is the relative Parseval defect
    |mean(fn^2) - sum of squared coefficients| / mean(fn^2) over the sphere,
    which is small only when degrees above kmax carry no energy.
    """
    from .quadrature import _unit_sphere

    if 2 * kmax > order:
        raise ConfigError(f"quadrature order {order} cannot resolve degree {kmax}; need >= {2 * kmax}")
    unit, w = _unit_sphere(d, order)
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    u = np.asarray(fn(c[None, :] + rho * unit), dtype=float)
    b = _project_fft3(u, order, kmax) if d == 3 else _project_generic(u, unit, w, d, kmax)
    ms = float(np.dot(w, u * u))
    defect = abs(ms - float(b @ b)) / ms if ms > 0 else 0.0
    offsets, _ = basis_tables(d, kmax)
    coef = b.copy()
    for k in range(1, kmax + 1):
        coef[offsets[d, k]:offsets[d, k + 1]] /= rho ** k
    return HarmonicExpansion.from_dense(d, coef, r_ref=rho), defect
