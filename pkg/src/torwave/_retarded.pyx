# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled retarded-integral kernel: trilinear periodic shell accumulation.

Same contract as the numpy fallback in ``_retarded_np``: for every grid
node x, add scale * sum_q w[q] * g(x + rho * xi_q) to ``out``, with g
trilinearly interpolated on the periodic [0, 2pi)^3 lattice.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

DEF TWO_PI = 6.283185307179586476925287


def accumulate_shell(
    double[:, :, ::1] g,
    double rho,
    double[:, ::1] xi,
    double[::1] wxi,
    double scale,
    double[:, :, ::1] out,
):
    cdef Py_ssize_t n1 = g.shape[0], n2 = g.shape[1], n3 = g.shape[2]
    cdef Py_ssize_t Q = xi.shape[0]
    cdef Py_ssize_t q, i, j, k
    cdef double s0, s1, s2, f0, f1, f2, w
    cdef double c000, c001, c010, c011, c100, c101, c110, c111
    cdef long b0, b1, b2
    cdef Py_ssize_t[::1] ia0 = np.empty(n1, dtype=np.intp)
    cdef Py_ssize_t[::1] ia1 = np.empty(n1, dtype=np.intp)
    cdef Py_ssize_t[::1] ja0 = np.empty(n2, dtype=np.intp)
    cdef Py_ssize_t[::1] ja1 = np.empty(n2, dtype=np.intp)
    cdef Py_ssize_t[::1] ka0 = np.empty(n3, dtype=np.intp)
    cdef Py_ssize_t[::1] ka1 = np.empty(n3, dtype=np.intp)

    for q in range(Q):
        s0 = rho * xi[q, 0] * n1 / TWO_PI
        s1 = rho * xi[q, 1] * n2 / TWO_PI
        s2 = rho * xi[q, 2] * n3 / TWO_PI
        b0 = <long>floor(s0)
        b1 = <long>floor(s1)
        b2 = <long>floor(s2)
        f0 = s0 - b0
        f1 = s1 - b1
        f2 = s2 - b2
        w = scale * wxi[q]
        c000 = w * (1 - f0) * (1 - f1) * (1 - f2)
        c001 = w * (1 - f0) * (1 - f1) * f2
        c010 = w * (1 - f0) * f1 * (1 - f2)
        c011 = w * (1 - f0) * f1 * f2
        c100 = w * f0 * (1 - f1) * (1 - f2)
        c101 = w * f0 * (1 - f1) * f2
        c110 = w * f0 * f1 * (1 - f2)
        c111 = w * f0 * f1 * f2
        for i in range(n1):
            ia0[i] = (i + b0) % n1
            if ia0[i] < 0:
                ia0[i] += n1
            ia1[i] = ia0[i] + 1
            if ia1[i] == n1:
                ia1[i] = 0
        for j in range(n2):
            ja0[j] = (j + b1) % n2
            if ja0[j] < 0:
                ja0[j] += n2
            ja1[j] = ja0[j] + 1
            if ja1[j] == n2:
                ja1[j] = 0
        for k in range(n3):
            ka0[k] = (k + b2) % n3
            if ka0[k] < 0:
                ka0[k] += n3
            ka1[k] = ka0[k] + 1
            if ka1[k] == n3:
                ka1[k] = 0
        for i in range(n1):
            for j in range(n2):
                for k in range(n3):
                    out[i, j, k] += (
                        c000 * g[ia0[i], ja0[j], ka0[k]]
                        + c001 * g[ia0[i], ja0[j], ka1[k]]
                        + c010 * g[ia0[i], ja1[j], ka0[k]]
                        + c011 * g[ia0[i], ja1[j], ka1[k]]
                        + c100 * g[ia1[i], ja0[j], ka0[k]]
                        + c101 * g[ia1[i], ja0[j], ka1[k]]
                        + c110 * g[ia1[i], ja1[j], ka0[k]]
                        + c111 * g[ia1[i], ja1[j], ka1[k]]
                    )
