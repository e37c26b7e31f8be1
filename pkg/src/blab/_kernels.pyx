# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solid-harmonic kernels (per-point recurrences, no large temporaries).

Mirrors ``blab._kernels_py``; see ``blab._tables`` for the basis construction.
"""

import numpy as np

from libc.stdlib cimport malloc, free
from libc.string cimport memset

cdef double SQRT2 = 1.4142135623730951


cdef void _level2(const double* x, int d, int kmax, const long long* off2,
                  double* v, double* g, bint want_grad) noexcept nogil:
    cdef double zr = 1.0, zi = 0.0, pr, pi, t
    cdef long long o
    cdef int k
    v[0] = 1.0
    if want_grad:
        g[0] = 0.0
        g[1] = 0.0
    for k in range(1, kmax + 1):
        pr = zr
        pi = zi
        t = zr * x[0] - zi * x[1]
        zi = zr * x[1] + zi * x[0]
        zr = t
        o = off2[k]
        v[o] = SQRT2 * zr
        v[o + 1] = SQRT2 * zi
        if want_grad:
            g[o * d] = SQRT2 * k * pr
            g[o * d + 1] = -SQRT2 * k * pi
            g[(o + 1) * d] = SQRT2 * k * pi
            g[(o + 1) * d + 1] = SQRT2 * k * pr


cdef void _gegenbauer(double alpha, int nmax, double z, double R,
                      double* G, double* Gz, double* GR) noexcept nogil:
    cdef int m
    cdef double a, b
    G[0] = 1.0
    Gz[0] = 0.0
    GR[0] = 0.0
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


cdef void _point(const double* x, int d, int kmax, const long long* offs, int offs_stride,
                 const double* norms, double* pv, double* pg, double* cv, double* cg,
                 double* G, double* Gz, double* GR, bint want_grad,
                 const double* coef, const unsigned char* needed,
                 double* out_v, double* out_g) noexcept nogil:
    # coef != NULL: contract top level into out_v[0], out_g[0:d]
    # coef == NULL: write the full top-level basis row into out_v
    cdef int e, j, m, k, i, mm, nmax
    cdef long long lo, hi, s, idx, total
    cdef double R, z, c, cG, cpv, alpha, val
    cdef const long long* off_e
    cdef const long long* off_p
    cdef double* tmp
    cdef bint top
    cdef int nn = kmax + 1

    _level2(x, d, kmax, offs + 2 * offs_stride, pv, pg, want_grad)
    if d == 2:
        total = offs[2 * offs_stride + kmax + 1]
        if coef == NULL:
            for idx in range(total):
                out_v[idx] = pv[idx]
        else:
            for k in range(kmax + 1):
                if not needed[k]:
                    continue
                for idx in range(offs[2 * offs_stride + k], offs[2 * offs_stride + k + 1]):
                    out_v[0] += coef[idx] * pv[idx]
                    out_g[0] += coef[idx] * pg[idx * d]
                    out_g[1] += coef[idx] * pg[idx * d + 1]
        return

    for e in range(3, d + 1):
        top = e == d
        off_e = offs + e * offs_stride
        off_p = offs + (e - 1) * offs_stride
        z = x[e - 1]
        R = 0.0
        for i in range(e):
            R += x[i] * x[i]
        for j in range(kmax + 1):
            alpha = j + (e - 2) / 2.0
            nmax = kmax - j
            _gegenbauer(alpha, nmax, z, R, G, Gz, GR)
            lo = off_p[j]
            hi = off_p[j + 1]
            for m in range(nmax + 1):
                k = m + j
                if top and not needed[k]:
                    continue
                c = norms[((e - 3) * nn + j) * nn + m]
                cG = c * G[m]
                s = off_e[k] + lo
                for mm in range(hi - lo):
                    idx = s + mm
                    val = cG * pv[lo + mm]
                    if top and coef != NULL:
                        if coef[idx] == 0.0:
                            continue
                        out_v[0] += coef[idx] * val
                        cpv = coef[idx] * c * pv[lo + mm]
                        for i in range(e - 1):
                            out_g[i] += coef[idx] * cG * pg[(lo + mm) * d + i] + cpv * 2.0 * GR[m] * x[i]
                        out_g[e - 1] += cpv * (2.0 * GR[m] * x[e - 1] + Gz[m])
                    elif top:
                        out_v[idx] = val
                    else:
                        cv[idx] = val
                        if want_grad:
                            cpv = c * pv[lo + mm]
                            for i in range(e - 1):
                                cg[idx * d + i] = cG * pg[(lo + mm) * d + i] + cpv * 2.0 * GR[m] * x[i]
                            cg[idx * d + e - 1] = cpv * (2.0 * GR[m] * x[e - 1] + Gz[m])
        if not top:
            tmp = pv
            pv = cv
            cv = tmp
            tmp = pg
            pg = cg
            cg = tmp


def _run(points, coef, int kmax, offsets, norms, bint contract):
    cdef const double[:, ::1] X = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    cdef int d = X.shape[1]
    cdef const long long[:, ::1] offs = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const double[:, :, ::1] nrm = np.ascontiguousarray(norms, dtype=np.float64)
    cdef long long total = offs[d, kmax + 1]
    cdef long long tmax = 1
    cdef int e
    for e in range(2, d + 1):
        if offs[e, kmax + 1] > tmax:
            tmax = offs[e, kmax + 1]
    cdef double[::1] cf
    cdef unsigned char[::1] need = np.zeros(kmax + 1, dtype=np.uint8)
    cdef double[::1] out_v
    cdef double[:, ::1] out_g
    cdef double[:, ::1] out_b
    cdef Py_ssize_t p
    cdef int k
    cdef const double* cf_ptr = NULL
    if contract:
        cf = np.ascontiguousarray(coef, dtype=np.float64)
        for k in range(kmax + 1):
            for p in range(offs[d, k], offs[d, k + 1]):
                if cf[p] != 0.0:
                    need[k] = 1
                    break
        cf_ptr = &cf[0]
        vals = np.zeros(n)
        grads = np.zeros((n, d))
        out_v = vals
        out_g = grads
    else:
        need[:] = 1
        basis = np.zeros((n, total))
        out_b = basis
    cdef double* pv = <double*> malloc(tmax * sizeof(double))
    cdef double* cv = <double*> malloc(tmax * sizeof(double))
    cdef double* pg = <double*> malloc(tmax * d * sizeof(double))
    cdef double* cg = <double*> malloc(tmax * d * sizeof(double))
    cdef double* G = <double*> malloc(3 * (kmax + 2) * sizeof(double))
    if pv == NULL or cv == NULL or pg == NULL or cg == NULL or G == NULL:
        free(pv); free(cv); free(pg); free(cg); free(G)
        raise MemoryError()
    memset(pg, 0, tmax * d * sizeof(double))
    memset(cg, 0, tmax * d * sizeof(double))
    try:
        with nogil:
            for p in range(n):
                if contract:
                    _point(&X[p, 0], d, kmax, &offs[0, 0], offs.shape[1], &nrm[0, 0, 0],
                           pv, pg, cv, cg, G, G + (kmax + 2), G + 2 * (kmax + 2), True,
                           cf_ptr, &need[0], &out_v[p], &out_g[p, 0])
                else:
                    _point(&X[p, 0], d, kmax, &offs[0, 0], offs.shape[1], &nrm[0, 0, 0],
                           pv, pg, cv, cg, G, G + (kmax + 2), G + 2 * (kmax + 2), False,
                           NULL, &need[0], &out_b[p, 0], NULL)
    finally:
        free(pv); free(cv); free(pg); free(cg); free(G)
    if contract:
        return vals, grads
    return basis


def solid_basis(points, int kmax, offsets, norms):
    """Values of every basis solid harmonic up to degree kmax, shape (n, total)."""
    return _run(points, None, kmax, offsets, norms, False)


def eval_expansion(points, coef, int kmax, offsets, norms):
    """Value and gradient of sum_i coef[i] * S_i(x) at each point."""
    return _run(points, coef, kmax, offsets, norms, True)
