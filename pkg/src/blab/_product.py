"""Per-degree evaluation of harmonic expansions on the product sphere rule.

Sphere rule nodes are tensor products (polar node t_i at each level, then the
lower-level nodes scaled by s_i = sqrt(1 - t_i^2)), and the basis factorizes
the same way, so values and gradients of every degree block can be assembled
level by level with dense contractions instead of point-by-point recursion.
Cost is roughly (number of nodes) * (kmax + 1)^2 rather than
(number of nodes) * (number of basis functions).
"""

from __future__ import annotations

import numpy as np

from ._tables import basis_tables
from .quadrature import polar_nodes

SQRT2 = np.sqrt(2.0)


def _gegenbauer_tables(t: np.ndarray, e: int, kmax: int):
    # G_n^{alpha_j}(t, 1) and its z- and R-derivatives for all j + n <= kmax
    n_t = t.size
    G = np.zeros((kmax + 1, kmax + 1, n_t))
    Gz = np.zeros_like(G)
    GR = np.zeros_like(G)
    for j in range(kmax + 1):
        alpha = j + (e - 2) / 2.0
        G[j, 0] = 1.0
        if kmax - j >= 1:
            G[j, 1] = 2.0 * alpha * t
            Gz[j, 1] = 2.0 * alpha
        for m in range(2, kmax - j + 1):
            a = 2.0 * (m + alpha - 1.0) / m
            b = (m + 2.0 * alpha - 2.0) / m
            G[j, m] = a * t * G[j, m - 1] - b * G[j, m - 2]
            Gz[j, m] = a * (G[j, m - 1] + t * Gz[j, m - 1]) - b * Gz[j, m - 2]
            GR[j, m] = a * t * GR[j, m - 1] - b * (G[j, m - 2] + GR[j, m - 2])
    return G, Gz, GR


def _level2(deg: np.ndarray, coef: np.ndarray, order: int):
    # coef[:, 0] multiplies sqrt2 Re z^k (or 1 for k = 0), coef[:, 1] multiplies sqrt2 Im z^k
    n_az = order + 1
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    k = deg[:, None].astype(float)
    c, s = np.cos(k * phi), np.sin(k * phi)
    scale = np.where(deg == 0, 1.0, SQRT2)[:, None]
    V = scale * (coef[:, :1] * c + coef[:, 1:] * s)
    c1, s1 = np.cos((k - 1) * phi), np.sin((k - 1) * phi)
    gk = (SQRT2 * k) * np.where(deg[:, None] == 0, 0.0, 1.0)
    G = np.empty(V.shape + (2,))
    G[..., 0] = gk * (coef[:, :1] * c1 + coef[:, 1:] * s1)
    G[..., 1] = gk * (-coef[:, :1] * s1 + coef[:, 1:] * c1)
    return V, G


def _level(e: int, deg: np.ndarray, coefs: list[np.ndarray], order: int, offsets, norms):
    """Values (B, n_e) and gradients (B, n_e, e) of single-degree functions at level-e unit nodes."""
    if e == 2:
        C = np.zeros((deg.size, 2))
        for b, a in enumerate(coefs):
            C[b, : a.size] = a
        return _level2(deg, C, order)
    kmax = int(deg.max())
    # split each degree-k block into its level-(e-1) sub-blocks of degree j <= k
    child_deg, child_coef, where = [], [], []
    for b, (k, a) in enumerate(zip(deg, coefs)):
        for j in range(int(k) + 1):
            sub = a[offsets[e - 1, j]:offsets[e - 1, j + 1]]
            if np.any(sub):
                where.append((b, j))
                child_deg.append(j)
                child_coef.append(sub)
    t, _ = polar_nodes(e, order)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    n_pol = t.size
    B = deg.size
    if not where:
        # every block is zero; node count still has to match the rule
        n_prev = _node_count(e - 1, order)
        return np.zeros((B, n_pol * n_prev)), np.zeros((B, n_pol * n_prev, e))
    Wv, Wg = _level(e - 1, np.array(child_deg), child_coef, order, offsets, norms)
    n_prev = Wv.shape[1]
    W = np.zeros((B, kmax + 1, n_prev))
    WG = np.zeros((B, kmax + 1, n_prev, e - 1))
    for i, (b, j) in enumerate(where):
        W[b, j] = Wv[i]
        WG[b, j] = Wg[i]
    G, Gz, GR = _gegenbauer_tables(t, e, kmax)
    P = np.zeros((B, kmax + 1, n_pol))
    Pz, PR, Pg = np.zeros_like(P), np.zeros_like(P), np.zeros_like(P)
    for b, k in enumerate(deg):
        for j in range(int(k) + 1):
            c = norms[e - 3, j, k - j]
            sj = s ** j
            P[b, j] = c * G[j, k - j] * sj
            Pz[b, j] = c * Gz[j, k - j] * sj
            PR[b, j] = c * GR[j, k - j] * sj
            if j > 0:
                Pg[b, j] = c * G[j, k - j] * s ** (j - 1)
    # batched matrix products (BLAS) over the degree index j
    stacked = np.concatenate([P, Pz, PR], axis=2).transpose(0, 2, 1) @ W
    V, Vz, VR = stacked[:, :n_pol], stacked[:, n_pol:2 * n_pol], stacked[:, 2 * n_pol:]
    lower = (Pg.transpose(0, 2, 1) @ WG.reshape(B, kmax + 1, -1)).reshape(B, n_pol, n_prev, e - 1)
    # gradient of G(x_e, |x|^2) S(x') = (Gz e_e + 2 GR x) S + G (grad' S, 0)
    prev_nodes = _unit_nodes(e - 1, order)
    X = np.empty((n_pol, n_prev, e))
    X[..., : e - 1] = s[:, None, None] * prev_nodes[None, :, :]
    X[..., e - 1] = t[:, None]
    grad = 2.0 * VR[..., None] * X[None]
    grad[..., : e - 1] += lower
    grad[..., e - 1] += Vz
    return V.reshape(B, -1), grad.reshape(B, -1, e)


def _node_count(e: int, order: int) -> int:
    return (order + 1) * (order // 2 + 1) ** (e - 2)


def _unit_nodes(e: int, order: int) -> np.ndarray:
    from .quadrature import _unit_sphere

    return _unit_sphere(e, order)[0]


def degree_parts(expansion, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-degree values (K+1, n) and gradients (K+1, n, d) of the solid harmonics
    sum_m a_{k,m} |x|^k Y_{k,m} at the nodes of sphere_rule(d, order) on the unit sphere.

    On the sphere of radius rho the degree-k part contributes rho^k V[k] to values
    and rho^(k-1) G[k] to gradients.
    """
    d = expansion.d
    K = expansion.kmax
    offsets, norms = basis_tables(d, K)
    dense = np.asarray(expansion.dense)
    deg = np.arange(K + 1)
    coefs = [dense[offsets[d, k]:offsets[d, k + 1]] for k in deg]
    return _level(d, deg, coefs, order, offsets, norms)
