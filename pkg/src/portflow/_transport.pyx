# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled transport gather kernels (hot inner loop of the characteristic flow).

Arithmetic matches _transport_py exactly; either backend may be active.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def gather_linear(double[::1] samples, double[::1] queries):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t i, idx
    cdef double scale = n - 1.0
    cdef double pos, w
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(m):
        pos = queries[i] * scale
        if pos < 0.0:
            pos = 0.0
        elif pos > scale:
            pos = scale
        idx = <Py_ssize_t>pos
        if idx > n - 2:
            idx = n - 2
        w = pos - idx
        out[i] = (1.0 - w) * samples[idx] + w * samples[idx + 1]
    return out_arr


def interp_accumulate(double[::1] out, double[::1] samples, double[::1] queries,
                      double coeff):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t i, idx
    cdef double scale = n - 1.0
    cdef double pos, w
    if coeff == 0.0:
        return np.asarray(out)
    for i in range(m):
        pos = queries[i] * scale
        if pos < 0.0:
            pos = 0.0
        elif pos > scale:
            pos = scale
        idx = <Py_ssize_t>pos
        if idx > n - 2:
            idx = n - 2
        w = pos - idx
        out[i] = out[i] + coeff * ((1.0 - w) * samples[idx] + w * samples[idx + 1])
    return np.asarray(out)
