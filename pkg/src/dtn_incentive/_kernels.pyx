# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled subset kernels. Semantics must match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


def race_table(double[::1] lam, double[::1] mu, int cand):
    """Win probability of ``cand`` for every holder set containing it (see _kernels_py)."""
    cdef Py_ssize_t n = lam.shape[0]
    cdef unsigned long long full = (1ULL << n) - 1ULL
    cdef unsigned long long cbit = 1ULL << cand
    cdef unsigned long long mask, bit
    cdef Py_ssize_t u
    cdef double rate, num
    out = np.zeros(1 << n, dtype=np.float64)
    cdef double[::1] win = out
    mask = full + 1ULL
    with nogil:
        while mask > 0:
            mask -= 1ULL
            if not (mask & cbit):
                continue
            rate = 0.0
            num = mu[cand]
            for u in range(n):
                bit = 1ULL << u
                if mask & bit:
                    rate = rate + mu[u]
                else:
                    rate = rate + lam[u]
                    num = num + lam[u] * win[mask | bit]
            win[mask] = num / rate
    return out


def subset_sum(double[::1] x, double[::1] y, double[::1] vals, int size):
    """Sum over subsets B of prod_{B} x * prod_{not B} y * vals[B] (see _kernels_py)."""
    cdef Py_ssize_t m = x.shape[0]
    cdef unsigned long long nsub = 1ULL << m
    cdef unsigned long long full = nsub - 1ULL
    cdef unsigned long long mask
    cdef int low
    cdef double total = 0.0
    cdef double *px = <double *> malloc(nsub * sizeof(double))
    cdef double *py = <double *> malloc(nsub * sizeof(double))
    if px == NULL or py == NULL:
        free(px)
        free(py)
        raise MemoryError()
    with nogil:
        px[0] = 1.0
        py[0] = 1.0
        for mask in range(1, nsub):
            low = __builtin_ctzll(mask)
            px[mask] = px[mask & (mask - 1ULL)] * x[low]
            py[mask] = py[mask & (mask - 1ULL)] * y[low]
        for mask in range(nsub):
            if size >= 0 and __builtin_popcountll(mask) != size:
                continue
            total = total + px[mask] * py[full ^ mask] * vals[mask]
    free(px)
    free(py)
    return total
