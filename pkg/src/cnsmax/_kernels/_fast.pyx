# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cubic kernels: same contract as _ref, scalar loops in C."""

import numpy as np

cimport numpy as cnp
from libc.math cimport acos, cos, fabs, sqrt, M_PI

cnp.import_array()

BACKEND = "compiled"


def real_cubic_roots(object a2o, object a1o, object a0o):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a2 = np.atleast_1d(np.asarray(a2o, dtype=np.float64))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a1 = np.atleast_1d(np.asarray(a1o, dtype=np.float64))
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a0 = np.atleast_1d(np.asarray(a0o, dtype=np.float64))
    cdef Py_ssize_t m = a2.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, 3), dtype=np.float64)
    cdef Py_ssize_t i, k, it, jmax
    cdef double p, q, mp_, arg, phi, r, f, df, tmp
    cdef double rr[3]
    for i in range(m):
        p = a1[i] - a2[i] * a2[i] / 3.0
        q = 2.0 * a2[i] * a2[i] * a2[i] / 27.0 - a2[i] * a1[i] / 3.0 + a0[i]
        mp_ = -p / 3.0
        mp_ = sqrt(mp_ if mp_ > 0.0 else 0.0)
        if mp_ > 0.0:
            arg = 3.0 * q / (2.0 * p * mp_)
        else:
            arg = 0.0
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        phi = acos(arg)
        for k in range(3):
            r = 2.0 * mp_ * cos((phi - 2.0 * M_PI * k) / 3.0) - a2[i] / 3.0
            for it in range(2):
                f = ((r + a2[i]) * r + a1[i]) * r + a0[i]
                df = (3.0 * r + 2.0 * a2[i]) * r + a1[i]
                if df != 0.0:
                    r -= f / df
            rr[k] = r
        # descending insertion sort of three values
        for k in range(1, 3):
            tmp = rr[k]
            jmax = k
            while jmax > 0 and rr[jmax - 1] < tmp:
                rr[jmax] = rr[jmax - 1]
                jmax -= 1
            rr[jmax] = tmp
        for k in range(3):
            out[i, k] = rr[k]
    return out


def char_roots_batch(object a2o, object a1o, object a0o):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] a2 = np.atleast_1d(np.asarray(a2o, dtype=np.complex128))
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] a1 = np.atleast_1d(np.asarray(a1o, dtype=np.complex128))
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] a0 = np.atleast_1d(np.asarray(a0o, dtype=np.complex128))
    cdef Py_ssize_t m = a2.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.empty((m, 3), dtype=np.complex128)
    cdef Py_ssize_t i, k, it
    cdef double complex p, q, sq, ua, ub, u3, uc, pou, r, f, df, w1, w2
    w1 = cos(2.0 * M_PI / 3.0) + 1j * sqrt(3.0) / 2.0
    w2 = w1 * w1
    for i in range(m):
        p = a1[i] - a2[i] * a2[i] / 3.0
        q = 2.0 * a2[i] * a2[i] * a2[i] / 27.0 - a2[i] * a1[i] / 3.0 + a0[i]
        sq = (q * q / 4.0 + p * p * p / 27.0) ** 0.5
        ua = -q / 2.0 + sq
        ub = -q / 2.0 - sq
        u3 = ua if abs(ua) >= abs(ub) else ub
        if abs(u3) == 0.0:
            out[i, 0] = out[i, 1] = out[i, 2] = -a2[i] / 3.0
            continue
        uc = u3 ** (1.0 / 3.0)
        pou = p / (3.0 * uc)
        for k in range(3):
            if k == 0:
                r = uc - pou
            elif k == 1:
                r = uc * w1 - pou / w1
            else:
                r = uc * w2 - pou / w2
            r = r - a2[i] / 3.0
            for it in range(2):
                f = ((r + a2[i]) * r + a1[i]) * r + a0[i]
                df = (3.0 * r + 2.0 * a2[i]) * r + a1[i]
                if df != 0:
                    r -= f / df
            out[i, k] = r
    return out
