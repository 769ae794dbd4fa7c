# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. See ``_fallback.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

NAME = "cython"


def lda_gibbs_sweeps(long[:, ::1] z, long[:, ::1] counts, const long[:, ::1] X,
                     const double[:, ::1] b, const double[::1] a,
                     const long[:, ::1] pos, const double[:, ::1] unif,
                     out, long first_sweep, long burn_in):
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t D = z.shape[1]
    cdef Py_ssize_t K = b.shape[0]
    cdef Py_ssize_t steps = pos.shape[1]
    cdef Py_ssize_t i, step, j, k, g, d
    cdef long old, new, word
    cdef double total, target
    cdef double[::1] cw = np.empty(K)
    cdef long[:, :, ::1] outv
    cdef bint record = out is not None
    if record:
        outv = out
    with nogil:
        for i in range(n):
            for step in range(steps):
                j = pos[i, step]
                old = z[i, j]
                counts[i, old] -= 1
                word = X[i, j]
                total = 0.0
                for k in range(K):
                    total = total + (a[k] + <double>counts[i, k]) * b[k, word]
                    cw[k] = total
                target = unif[i, step] * cw[K - 1]
                new = 0
                for k in range(K):
                    if cw[k] <= target:
                        new += 1
                if new > K - 1:
                    new = K - 1
                z[i, j] = new
                counts[i, new] += 1
                if record and (step + 1) % D == 0:
                    g = first_sweep + (step + 1) // D - 1
                    if g >= burn_in:
                        for d in range(D):
                            outv[i, g - burn_in, d] = z[i, d]


cdef inline double _sqdelta(long v, long vp, long w, long wp) nogil:
    cdef long idx[4]
    cdef double coef[4]
    cdef double s = 0.0
    cdef int p, q
    idx[0] = v; idx[1] = vp; idx[2] = w; idx[3] = wp
    coef[0] = -1.0; coef[1] = 1.0; coef[2] = 1.0; coef[3] = -1.0
    for p in range(4):
        for q in range(4):
            if idx[p] == idx[q]:
                s += coef[p] * coef[q]
    return s


def bow_stein_gram(const long[:, ::1] X, const long[:, ::1] Bc, const double[:, ::1] S, block=None):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t D = X.shape[1]
    cdef long L = Bc.shape[1]
    cdef Py_ssize_t i, j, d, l
    cdef long v, vp, w, wp
    cdef double N, k, c, ss, t1, t2, tr, n_xb, n_yb, n_both, u_v, u_vp, u_w, u_wp
    cdef double k_xb, k_yb, k_both, diffl
    H = np.empty((n, n))
    cdef double[:, ::1] Hv = H
    c = 1.0 / (2.0 * D)
    with nogil:
        for i in range(n):
            for j in range(i, n):
                N = 0.0
                for l in range(L):
                    diffl = <double>(Bc[i, l] - Bc[j, l])
                    N += diffl * diffl
                k = exp(-N * c)
                ss = 0.0
                t1 = 0.0
                t2 = 0.0
                tr = 0.0
                for d in range(D):
                    v = X[i, d]
                    vp = (v - 1 + L) % L
                    w = X[j, d]
                    wp = (w - 1 + L) % L
                    u_v = <double>(Bc[i, v] - Bc[j, v])
                    u_vp = <double>(Bc[i, vp] - Bc[j, vp])
                    u_w = <double>(Bc[i, w] - Bc[j, w])
                    u_wp = <double>(Bc[i, wp] - Bc[j, wp])
                    n_xb = N - 2.0 * u_v + 2.0 * u_vp + 2.0
                    n_yb = N + 2.0 * u_w - 2.0 * u_wp + 2.0
                    n_both = N + 2.0 * (-u_v + u_vp + u_w - u_wp) + _sqdelta(v, vp, w, wp)
                    k_xb = exp(-n_xb * c)
                    k_yb = exp(-n_yb * c)
                    k_both = exp(-n_both * c)
                    ss += S[i, d] * S[j, d]
                    t1 += S[i, d] * (k - k_yb)
                    t2 += (k - k_xb) * S[j, d]
                    tr += k - k_xb - k_yb + k_both
                Hv[i, j] = k * ss + t1 + t2 + tr
                Hv[j, i] = Hv[i, j]
    return H
