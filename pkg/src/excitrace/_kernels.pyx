# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Pauli-string kernels.

Same contracts as ``_kernels_py``; the dispatcher in ``kernels`` picks one.
Index convention: site 0 is the most significant bit of the amplitude index.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline double _sign(unsigned long long i, unsigned long long mask) noexcept nogil:
    return -1.0 if (__builtin_popcountll(i & mask) & 1) else 1.0


def apply_groups(const long long[::1] flips, const double complex[:, ::1] diags,
                 const double complex[:, ::1] psi):
    cdef Py_ssize_t n_groups = flips.shape[0]
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t dim = psi.shape[1]
    out_arr = np.zeros((batch, dim), dtype=np.complex128)
    if batch == 0 or dim == 0 or n_groups == 0:
        return out_arr
    cdef double complex[:, ::1] out = out_arr
    cdef const double *d = <const double *>&diags[0, 0]
    cdef const double *p
    cdef double *o
    cdef Py_ssize_t g, b, i, k
    cdef double re, im, dr, di, pr, pi
    with nogil:
        for b in range(batch):
            p = <const double *>&psi[b, 0]
            o = <double *>&out[b, 0]
            # gather form: one accumulation per output amplitude
            for i in range(dim):
                re = 0.0
                im = 0.0
                for g in range(n_groups):
                    k = <Py_ssize_t>(i ^ <unsigned long long>flips[g])
                    dr = d[2 * (g * dim + k)]
                    di = d[2 * (g * dim + k) + 1]
                    pr = p[2 * k]
                    pi = p[2 * k + 1]
                    re = re + dr * pr - di * pi
                    im = im + dr * pi + di * pr
                o[2 * i] = re
                o[2 * i + 1] = im
    return out_arr


def pauli_rotate(double complex[:, ::1] psi, long long flip, long long signmask,
                 double complex phase, const double complex[::1] a,
                 const double complex[::1] c):
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t dim = psi.shape[1]
    cdef unsigned long long f = <unsigned long long>flip
    cdef unsigned long long m = <unsigned long long>signmask
    cdef Py_ssize_t b, i, j
    cdef double complex x, y, ab, cb
    with nogil:
        for b in range(batch):
            ab = a[b]
            cb = c[b] * phase
            if f == 0:
                for i in range(dim):
                    psi[b, i] = (ab + cb * _sign(i, m)) * psi[b, i]
            else:
                for i in range(dim):
                    j = <Py_ssize_t>(i ^ f)
                    if j < i:
                        continue
                    x = psi[b, i]
                    y = psi[b, j]
                    psi[b, j] = ab * y + cb * _sign(i, m) * x
                    psi[b, i] = ab * x + cb * _sign(j, m) * y


def pauli_expect(const double complex[:, ::1] lam, const double complex[:, ::1] phi,
                 long long flip, long long signmask, double complex phase):
    cdef Py_ssize_t batch = phi.shape[0]
    cdef Py_ssize_t dim = phi.shape[1]
    cdef unsigned long long f = <unsigned long long>flip
    cdef unsigned long long m = <unsigned long long>signmask
    out_arr = np.zeros(batch, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t b, i
    cdef double complex acc, l
    with nogil:
        for b in range(batch):
            acc = 0
            for i in range(dim):
                l = lam[b, <Py_ssize_t>(i ^ f)]
                acc = acc + l.conjugate() * _sign(i, m) * phi[b, i]
            out[b] = acc * phase
    return out_arr
