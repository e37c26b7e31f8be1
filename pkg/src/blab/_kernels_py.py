"""Pure numpy implementation of the solid-harmonic kernels.

Same signatures as the compiled ``_kernels`` module; selected automatically
when the extension is not built, or forced with ``BLAB_PURE_PYTHON=1``.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)

# points per chunk is chosen so one chunk of basis + gradients stays near this many doubles
_CHUNK_DOUBLES = 4_000_000


def _level2(x: np.ndarray, kmax: int, off: np.ndarray, want_grad: bool):
    n = x.shape[0]
    total = int(off[kmax + 1])
    vals = np.zeros((n, total))
    grads = np.zeros((n, total, 2)) if want_grad else None
    z = x[:, 0] + 1j * x[:, 1]
    zk = np.ones(n, dtype=complex)
    zkm1 = np.zeros(n, dtype=complex)  # z^(k-1)
    vals[:, 0] = 1.0
    for k in range(1, kmax + 1):
        zkm1 = zk
        zk = zk * z
        o = off[k]
        vals[:, o] = SQRT2 * zk.real
        vals[:, o + 1] = SQRT2 * zk.imag
        if want_grad:
            dz = k * zkm1
            grads[:, o, 0] = SQRT2 * dz.real
            grads[:, o, 1] = -SQRT2 * dz.imag
            grads[:, o + 1, 0] = SQRT2 * dz.imag
            grads[:, o + 1, 1] = SQRT2 * dz.real
    return vals, grads


def _level_up(prev_v, prev_g, x, e, kmax, offsets, norms, want_grad):
    """Build level-e solid harmonics from level e-1 ones."""
    n = x.shape[0]
    off_e = offsets[e]
    off_p = offsets[e - 1]
    total = int(off_e[kmax + 1])
    vals = np.zeros((n, total))
    grads = np.zeros((n, total, e)) if want_grad else None
    z = x[:, e - 1]
    R = np.einsum("ij,ij->i", x[:, :e], x[:, :e])
    for j in range(kmax + 1):
        alpha = j + (e - 2) / 2.0
        nmax = kmax - j
        G = np.empty((nmax + 1, n))
        Gz = np.empty((nmax + 1, n))
        GR = np.empty((nmax + 1, n))
        G[0], Gz[0], GR[0] = 1.0, 0.0, 0.0
        if nmax >= 1:
            G[1] = 2.0 * alpha * z
            Gz[1] = 2.0 * alpha
            GR[1] = 0.0
        for m in range(2, nmax + 1):
            a = 2.0 * (m + alpha - 1.0) / m
            b = (m + 2.0 * alpha - 2.0) / m
            G[m] = a * z * G[m - 1] - b * R * G[m - 2]
            Gz[m] = a * (G[m - 1] + z * Gz[m - 1]) - b * R * Gz[m - 2]
            GR[m] = a * z * GR[m - 1] - b * (G[m - 2] + R * GR[m - 2])
        lo, hi = off_p[j], off_p[j + 1]
        pv = prev_v[:, lo:hi]
        for m in range(nmax + 1):
            k = m + j
            c = norms[e - 3, j, m]
            s = off_e[k] + lo
            vals[:, s:s + hi - lo] = (c * G[m])[:, None] * pv
            if want_grad:
                blk = grads[:, s:s + hi - lo, :]
                blk[:, :, : e - 1] = (c * G[m])[:, None, None] * prev_g[:, lo:hi, :]
                # d/dx of G_m(x_e, |x|^2) = Gz e_e + 2 GR x
                common = 2.0 * GR[m][:, None] * x[:, :e]
                common[:, e - 1] += Gz[m]
                blk += c * pv[:, :, None] * common[:, None, :]
    return vals, grads


def _basis(x: np.ndarray, kmax: int, offsets, norms, want_grad: bool):
    d = x.shape[1]
    v, g = _level2(x, kmax, offsets[2], want_grad)
    for e in range(3, d + 1):
        v, g = _level_up(v, g, x, e, kmax, offsets, norms, want_grad)
    return v, g


def _chunk(d: int, total: int, want_grad: bool) -> int:
    per = total * (d + 1 if want_grad else 1) * 2
    return max(8, _CHUNK_DOUBLES // max(per, 1))


def solid_basis(points, kmax, offsets, norms):
    """Values of every basis solid harmonic up to degree kmax, shape (n, total)."""
    x = np.ascontiguousarray(points, dtype=float)
    d = x.shape[1]
    total = int(offsets[d, kmax + 1])
    out = np.empty((x.shape[0], total))
    step = _chunk(d, total, False)
    for s in range(0, x.shape[0], step):
        out[s:s + step] = _basis(x[s:s + step], kmax, offsets, norms, False)[0]
    return out


def eval_expansion(points, coef, kmax, offsets, norms):
    """Value and gradient of sum_i coef[i] * S_i(x) at each point."""
    x = np.ascontiguousarray(points, dtype=float)
    n, d = x.shape
    coef = np.asarray(coef, dtype=float)
    total = int(offsets[d, kmax + 1])
    vals = np.empty(n)
    grads = np.empty((n, d))
    step = _chunk(d, total, True)
    for s in range(0, n, step):
        v, g = _basis(x[s:s + step], kmax, offsets, norms, True)
        vals[s:s + step] = v @ coef
        grads[s:s + step] = np.einsum("ntd,t->nd", g, coef)
    return vals, grads
