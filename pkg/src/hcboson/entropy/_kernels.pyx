# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled joint-cell entropy kernels.

Depth-first enumeration over per-site cell tuples with branch pruning:
a subtree is dropped (and its exact remaining mass accounted) when the
mass still reachable below it falls under theta. Array conventions match
:mod:`hcboson.entropy._reference`.
"""

from libc.math cimport log
from libc.stdlib cimport free, malloc

import numpy as np


cdef struct Acc:
    double S
    double S_comp      # Kahan compensation: millions of sequential adds
    double dropped
    long long nodes


cdef inline void _kahan_add(double* total, double* comp, double term) noexcept nogil:
    cdef double y = term - comp[0]
    cdef double t = total[0] + y
    comp[0] = (t - total[0]) - y
    total[0] = t


cdef void _dfs_fact(int k, int n, int dim, int M,
                    double* wbuf, double* leaf, const double** sel,
                    const double* rem, const long* order,
                    double theta, Acc* acc) noexcept nogil:
    cdef double* w = wbuf + k * dim
    cdef double* w2 = wbuf + (k + 1) * dim
    cdef int ci, m
    cdef long c
    cdef double p, bound, f, wm
    cdef const double* dm
    if k == n - 1:
        # accumulate all M cell masses state-by-state: the inner loop is
        # branch-free and vectorizes, and leaves dominate the node count
        for ci in range(M):
            leaf[ci] = 0.0
        for m in range(dim):
            wm = w[m]
            if wm == 0.0:
                continue
            dm = sel[k * dim + m]
            for ci in range(M):
                leaf[ci] += wm * dm[ci]
        acc.nodes += M
        for ci in range(M):
            p = leaf[ci]
            if p > 0.0:
                _kahan_add(&acc.S, &acc.S_comp, -p * log(p))
        return
    for ci in range(M):
        c = order[ci]
        bound = 0.0
        for m in range(dim):
            f = w[m] * sel[k * dim + m][c]
            w2[m] = f
            bound += f * rem[(k + 1) * dim + m]
        acc.nodes += 1
        if bound <= 0.0:
            continue
        if bound < theta:
            acc.dropped += bound
            continue
        _dfs_fact(k + 1, n, dim, M, wbuf, leaf, sel, rem, order,
                  theta, acc)


cdef void _dfs_exact(int k, int n, int dim, int M,
                     double* abuf, double* leaf, const double** sel,
                     const double* rem2, const long* order,
                     double theta, Acc* acc) noexcept nogil:
    # amplitudes stored interleaved (re, im) to keep one buffer type
    cdef double* a = abuf + 2 * k * dim
    cdef double* a2 = abuf + 2 * (k + 1) * dim
    cdef int ci, m
    cdef long c
    cdef double pre, pim, cre, cim, are, aim, p, bound
    cdef const double* cm
    if k == n - 1:
        for ci in range(2 * M):
            leaf[ci] = 0.0
        for m in range(dim):
            are = a[2 * m]; aim = a[2 * m + 1]
            if are == 0.0 and aim == 0.0:
                continue
            cm = sel[k * dim + m]
            for ci in range(M):
                leaf[2 * ci] += are * cm[2 * ci] - aim * cm[2 * ci + 1]
                leaf[2 * ci + 1] += are * cm[2 * ci + 1] + aim * cm[2 * ci]
        acc.nodes += M
        for ci in range(M):
            p = leaf[2 * ci] * leaf[2 * ci] + leaf[2 * ci + 1] * leaf[2 * ci + 1]
            if p > 0.0:
                _kahan_add(&acc.S, &acc.S_comp, -p * log(p))
        return
    for ci in range(M):
        c = order[ci]
        bound = 0.0
        for m in range(dim):
            cm = sel[k * dim + m]
            cre = cm[2 * c]; cim = cm[2 * c + 1]
            are = a[2 * m]; aim = a[2 * m + 1]
            a2[2 * m] = are * cre - aim * cim
            a2[2 * m + 1] = are * cim + aim * cre
            bound += (a2[2 * m] * a2[2 * m] + a2[2 * m + 1] * a2[2 * m + 1]) \
                * rem2[(k + 1) * dim + m]
        acc.nodes += 1
        bound *= dim
        if bound <= 0.0:
            continue
        if bound < theta:
            acc.dropped += bound
            continue
        _dfs_exact(k + 1, n, dim, M, abuf, leaf, sel, rem2, order,
                   theta, acc)


def fact_entropy(q, bits, d0, d1, rem, order, double theta):
    """Factorized-probability joint entropy. Returns (S, dropped, nodes)."""
    cdef double[::1] q_ = np.ascontiguousarray(q, dtype=np.float64)
    cdef unsigned char[:, ::1] bits_ = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef double[::1] d0_ = np.ascontiguousarray(d0, dtype=np.float64)
    cdef double[::1] d1_ = np.ascontiguousarray(d1, dtype=np.float64)
    cdef double[:, ::1] rem_ = np.ascontiguousarray(rem, dtype=np.float64)
    cdef long[::1] order_ = np.ascontiguousarray(order, dtype=np.int64)
    cdef int dim = bits_.shape[0]
    cdef int n = bits_.shape[1]
    cdef int M = d0_.shape[0]
    cdef Acc acc
    acc.S = 0.0
    acc.S_comp = 0.0
    acc.dropped = 0.0
    acc.nodes = 0
    cdef double* wbuf = <double*> malloc(sizeof(double) * ((n + 1) * dim + M))
    cdef const double** sel = <const double**> malloc(
        sizeof(double*) * n * dim)
    if wbuf == NULL or sel == NULL:
        free(wbuf); free(sel)
        raise MemoryError()
    cdef double* leaf = wbuf + (n + 1) * dim
    cdef int m, kk
    try:
        for m in range(dim):
            wbuf[m] = q_[m]
        for kk in range(n):
            for m in range(dim):
                sel[kk * dim + m] = &d1_[0] if bits_[m, kk] else &d0_[0]
        with nogil:
            _dfs_fact(0, n, dim, M, wbuf, leaf, sel,
                      &rem_[0, 0], &order_[0], theta, &acc)
    finally:
        free(wbuf)
        free(sel)
    return acc.S, acc.dropped, int(acc.nodes)


def exact_entropy(lam, bits, C0, C1, rem2, order, double theta):
    """Cross-term-preserving joint entropy. Returns (S, dropped, nodes)."""
    lam_c = np.ascontiguousarray(lam, dtype=np.complex128)
    C0_c = np.ascontiguousarray(C0, dtype=np.complex128)
    C1_c = np.ascontiguousarray(C1, dtype=np.complex128)
    cdef double[::1] lam_ = lam_c.view(np.float64)
    cdef double[::1] C0_ = C0_c.view(np.float64)
    cdef double[::1] C1_ = C1_c.view(np.float64)
    cdef unsigned char[:, ::1] bits_ = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef double[:, ::1] rem2_ = np.ascontiguousarray(rem2, dtype=np.float64)
    cdef long[::1] order_ = np.ascontiguousarray(order, dtype=np.int64)
    cdef int dim = bits_.shape[0]
    cdef int n = bits_.shape[1]
    cdef int M = order_.shape[0]
    cdef Acc acc
    acc.S = 0.0
    acc.S_comp = 0.0
    acc.dropped = 0.0
    acc.nodes = 0
    cdef double* abuf = <double*> malloc(
        sizeof(double) * 2 * ((n + 1) * dim + M))
    cdef const double** sel = <const double**> malloc(
        sizeof(double*) * n * dim)
    if abuf == NULL or sel == NULL:
        free(abuf); free(sel)
        raise MemoryError()
    cdef double* leaf = abuf + 2 * (n + 1) * dim
    cdef int m, kk
    try:
        for m in range(2 * dim):
            abuf[m] = lam_[m]
        for kk in range(n):
            for m in range(dim):
                sel[kk * dim + m] = &C1_[0] if bits_[m, kk] else &C0_[0]
        with nogil:
            _dfs_exact(0, n, dim, M, abuf, leaf, sel,
                       &rem2_[0, 0], &order_[0], theta, &acc)
    finally:
        free(abuf)
        free(sel)
    return acc.S, acc.dropped, int(acc.nodes)
