"""Index offsets and normalization constants for the hyperspherical solid-harmonic basis.

The real basis of degree-k harmonics in R^e is built from the basis in R^(e-1):

    S^{(e)}_{k,(j,m)}(x) = c_e(j, n) * G_n^{alpha}(x_e, |x|^2) * S^{(e-1)}_{j,m}(x_1..x_{e-1})

with n = k - j, alpha = j + (e-2)/2 and G_n^alpha(z, R) = R^{n/2} C_n^alpha(z / sqrt(R)),
a polynomial obeying

    n G_n = 2 (n + alpha - 1) z G_{n-1} - (n + 2 alpha - 2) R G_{n-2}.

The base level e = 2 is {1, sqrt2 Re z^k, sqrt2 Im z^k}. Constants c_e make every
basis function have unit mean square on the unit sphere.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def dim_harmonics(d: int, k: int) -> int:
    """Dimension of the space of degree-k spherical harmonics on S^{d-1}."""
    if d < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {d}")
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    top = math.comb(k + d - 1, d - 1)
    low = math.comb(k + d - 3, d - 1) if k >= 2 else 0
    return top - low


def _log_gegenbauer_norm(n: int, alpha: float) -> float:
    # log of int_{-1}^{1} (1-t^2)^(alpha-1/2) C_n^alpha(t)^2 dt
    return (
        math.log(math.pi)
        + (1.0 - 2.0 * alpha) * math.log(2.0)
        + math.lgamma(n + 2.0 * alpha)
        - math.lgamma(n + 1.0)
        - math.log(n + alpha)
        - 2.0 * math.lgamma(alpha)
    )


def _log_polar_measure(e: int) -> float:
    # log of int_{-1}^{1} (1-t^2)^((e-3)/2) dt
    return 0.5 * math.log(math.pi) + math.lgamma((e - 1) / 2.0) - math.lgamma(e / 2.0)


@lru_cache(maxsize=64)
def basis_tables(d: int, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (offsets, norms) for ambient dimension d up to degree kmax.

    offsets[e, k] is the flat index where the degree-k block starts at level e
    (rows e < 2 unused); offsets[e, kmax + 1] is the level's total size.
    norms[e - 3, j, n] is c_e(j, n) for levels e >= 3.
    """
    if d < 2 or kmax < 0:
        raise ValueError("need d >= 2 and kmax >= 0")
    offsets = np.zeros((d + 1, kmax + 2), dtype=np.int64)
    for e in range(2, d + 1):
        acc = 0
        for k in range(kmax + 1):
            offsets[e, k] = acc
            acc += dim_harmonics(e, k)
        offsets[e, kmax + 1] = acc
    norms = np.zeros((max(d - 2, 1), kmax + 1, kmax + 1))
    for e in range(3, d + 1):
        lp = _log_polar_measure(e)
        for j in range(kmax + 1):
            alpha = j + (e - 2) / 2.0
            for n in range(kmax + 1 - j):
                norms[e - 3, j, n] = math.exp(0.5 * (lp - _log_gegenbauer_norm(n, alpha)))
    offsets.setflags(write=False)
    norms.setflags(write=False)
    return offsets, norms
