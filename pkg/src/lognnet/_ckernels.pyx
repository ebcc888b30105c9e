# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see _pykernels.py for the reference semantics.

Map expressions are written term for term like chaos._next so the compiled
orbits are bit-identical to the Python ones.  Build with -ffp-contract=off:
fused multiply-add would break that equivalence.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, exp, log, isfinite, M_PI

cnp.import_array()

NAME = "cython"

DEF SINE_LOGISTIC = 0
DEF LOGISTIC = 1
DEF SINE = 2
DEF GAUSS = 3
DEF TWO_SIDED = 4
DEF PLANK = 5
DEF HENON1 = 6
DEF HENON2 = 7


cdef inline void _next(int code, const double* p, double* x, double* y) noexcept nogil:
    cdef double xn = x[0]
    cdef double yn = y[0]
    if code == LOGISTIC:
        x[0] = p[1] * xn * (1.0 - xn)
    elif code == SINE:
        x[0] = p[1] * sin(M_PI * xn)
    elif code == GAUSS:
        x[0] = exp(-p[2] * xn * xn) + p[1]
    elif code == TWO_SIDED:
        x[0] = p[1] * xn / (1.0 + xn * xn * xn)
    elif code == PLANK:
        x[0] = p[1] * xn * xn * xn / (1.0 + exp(xn))
    elif code == HENON1:
        x[0] = 1.0 - p[2] * xn * xn + yn
        y[0] = p[3] * xn
    elif code == HENON2:
        x[0] = xn + p[2] * xn * xn + p[3] * yn * yn - p[4] * yn * xn - p[5]
        y[0] = xn


cdef inline double _sine_profile(const double* p, long i) noexcept nogil:
    return p[0] * sin((<double>i / p[3]) * (M_PI / p[1]))


cdef inline double _seed_y(int code, const double* p) noexcept nogil:
    if code == HENON1 or code == HENON2:
        return p[1]
    return 0.0


def fill(int code, params, long n_rows, long n_cols):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] W = np.zeros((n_rows, n_cols), dtype=np.float64)
    cdef double[:, ::1] w = W
    cdef const double* p = &pa[0]
    cdef long i, j, n = 0
    cdef double x, y, v, r
    cdef long fail = -1
    with nogil:
        if code == SINE_LOGISTIC:
            r = p[2]
            for i in range(n_rows):
                v = _sine_profile(p, i)
                for j in range(n_cols):
                    if j:
                        v = 1.0 - r * (v * v)
                    if not isfinite(v):
                        fail = j * n_rows + i + 1
                        break
                    w[i, j] = v
                if fail >= 0:
                    break
        else:
            x = p[0]
            y = _seed_y(code, p)
            for j in range(n_cols):
                for i in range(n_rows):
                    _next(code, p, &x, &y)
                    n += 1
                    if not (isfinite(x) and isfinite(y)):
                        fail = n
                        break
                    w[i, j] = x
                if fail >= 0:
                    break
    return W, fail


def project(W, Y):
    cdef double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef long n_rows = w.shape[0], n_cols = w.shape[1]
    if yv.shape[0] != n_rows:
        raise ValueError("dimension mismatch")
    out = np.zeros(n_cols, dtype=np.float64)
    cdef double[::1] s = out
    cdef long i, j
    with nogil:
        for i in range(n_rows):
            for j in range(n_cols):
                s[j] = s[j] + w[i, j] * yv[i]
    return out


def project_batch(W, Ys):
    cdef double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[:, ::1] ys = np.ascontiguousarray(Ys, dtype=np.float64)
    cdef long n = ys.shape[0], n_rows = w.shape[0], n_cols = w.shape[1]
    if ys.shape[1] != n_rows:
        raise ValueError("dimension mismatch")
    out = np.zeros((n, n_cols), dtype=np.float64)
    cdef double[:, ::1] s = out
    cdef long t, i, j
    cdef double yi
    with nogil:
        for t in range(n):
            for i in range(n_rows):
                yi = ys[t, i]
                for j in range(n_cols):
                    s[t, j] = s[t, j] + w[i, j] * yi
    return out


def project_streaming(int code, params, Y, long n_cols):
    cdef cnp.ndarray[double, ndim=1] pa = np.ascontiguousarray(params, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double* p = &pa[0]
    cdef long n_rows = yv.shape[0]
    out = np.zeros(n_cols, dtype=np.float64)
    cdef double[::1] s = out
    cdef long i, j, n = 0
    cdef long fail = -1
    cdef double x, y, v, r, acc, yi
    with nogil:
        if code == SINE_LOGISTIC:
            r = p[2]
            for i in range(n_rows):
                v = _sine_profile(p, i)
                yi = yv[i]
                for j in range(n_cols):
                    if j:
                        v = 1.0 - r * (v * v)
                    if not isfinite(v):
                        fail = j * n_rows + i + 1
                        break
                    s[j] = s[j] + v * yi
                if fail >= 0:
                    break
        else:
            x = p[0]
            y = _seed_y(code, p)
            for j in range(n_cols):
                acc = 0.0
                for i in range(n_rows):
                    _next(code, p, &x, &y)
                    n += 1
                    if not (isfinite(x) and isfinite(y)):
                        fail = n
                        break
                    acc = acc + x * yv[i]
                if fail >= 0:
                    break
                s[j] = acc
    return out, fail


def forward_batch(W1, W2, X):
    cdef double[:, ::1] w1 = np.ascontiguousarray(W1, dtype=np.float64)
    cdef double[:, ::1] w2 = np.ascontiguousarray(W2, dtype=np.float64)
    cdef double[:, ::1] xs = np.ascontiguousarray(X, dtype=np.float64)
    cdef long n = xs.shape[0], n_in = w1.shape[0], n_hid = w1.shape[1], n_out = w2.shape[1]
    if xs.shape[1] != n_in or w2.shape[0] != n_hid + 1:
        raise ValueError("dimension mismatch")
    out = np.zeros((n, n_out), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] hext = np.empty(n_hid + 1, dtype=np.float64)
    cdef long t, i, k, m
    cdef double a, zmax, total, xi
    with nogil:
        for t in range(n):
            hext[0] = 1.0
            for k in range(n_hid):
                hext[k + 1] = 0.0
            for i in range(n_in):
                xi = xs[t, i]
                for k in range(n_hid):
                    hext[k + 1] = hext[k + 1] + xi * w1[i, k]
            for k in range(n_hid):
                hext[k + 1] = 1.0 / (1.0 + exp(-hext[k + 1]))
            for k in range(n_hid + 1):
                for m in range(n_out):
                    o[t, m] = o[t, m] + hext[k] * w2[k, m]
            zmax = o[t, 0]
            for m in range(1, n_out):
                if o[t, m] > zmax:
                    zmax = o[t, m]
            total = 0.0
            for m in range(n_out):
                o[t, m] = exp(o[t, m] - zmax)
                total = total + o[t, m]
            for m in range(n_out):
                o[t, m] = o[t, m] / total
    return out


def sgd_epoch(W1, W2, X, labels, double lr):
    cdef double[:, ::1] w1 = W1
    cdef double[:, ::1] w2 = W2
    cdef double[:, ::1] xs = np.ascontiguousarray(X, dtype=np.float64)
    cdef long[::1] ys = np.ascontiguousarray(labels, dtype=np.int64)
    cdef long n = xs.shape[0], n_in = w1.shape[0], n_hid = w1.shape[1], n_out = w2.shape[1]
    if xs.shape[1] != n_in or w2.shape[0] != n_hid + 1 or ys.shape[0] != n:
        raise ValueError("dimension mismatch")
    cdef double[::1] hext = np.empty(n_hid + 1, dtype=np.float64)
    cdef double[::1] z = np.empty(n_out, dtype=np.float64)
    cdef double[::1] da = np.empty(n_hid, dtype=np.float64)
    cdef long t, i, k, m, label
    cdef double zmax, se, loss = 0.0, xi, h, acc, g
    with nogil:
        for t in range(n):
            label = ys[t]
            hext[0] = 1.0
            for k in range(n_hid):
                hext[k + 1] = 0.0
            for i in range(n_in):
                xi = xs[t, i]
                for k in range(n_hid):
                    hext[k + 1] = hext[k + 1] + xi * w1[i, k]
            for k in range(n_hid):
                hext[k + 1] = 1.0 / (1.0 + exp(-hext[k + 1]))
            for m in range(n_out):
                z[m] = 0.0
            for k in range(n_hid + 1):
                for m in range(n_out):
                    z[m] = z[m] + hext[k] * w2[k, m]
            zmax = z[0]
            for m in range(1, n_out):
                if z[m] > zmax:
                    zmax = z[m]
            se = 0.0
            for m in range(n_out):
                se = se + exp(z[m] - zmax)
            loss = loss + log(se) + zmax - z[label]
            # z becomes dL/dz = softmax - onehot
            for m in range(n_out):
                z[m] = exp(z[m] - zmax) / se
            z[label] = z[label] - 1.0
            for k in range(n_hid):
                acc = 0.0
                for m in range(n_out):
                    acc = acc + w2[k + 1, m] * z[m]
                h = hext[k + 1]
                da[k] = acc * h * (1.0 - h)
            for k in range(n_hid + 1):
                g = lr * hext[k]
                for m in range(n_out):
                    w2[k, m] = w2[k, m] - g * z[m]
            for i in range(n_in):
                g = lr * xs[t, i]
                for k in range(n_hid):
                    w1[i, k] = w1[i, k] - g * da[k]
    return loss
