# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split scans. Must stay bit-identical to _split_py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_gini(cnp.float64_t[::1] x, cnp.int64_t[::1] y, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    cdef Py_ssize_t i, nl, nr, best_nl = -1
    cdef long long l1 = 0, total1 = 0, l0, r1, r0
    cdef double cost, best_cost = np.inf, best_thr = 0.0
    for i in range(n):
        total1 += y[i]
    for i in range(n - 1):
        l1 += y[i]
        nl = i + 1
        nr = n - nl
        if x[i + 1] == x[i]:
            continue
        if nl < min_leaf or nr < min_leaf:
            continue
        l0 = nl - l1
        r1 = total1 - l1
        r0 = nr - r1
        cost = (<double> (l0 * l1)) / (<double> nl) + (<double> (r0 * r1)) / (<double> nr)
        if cost < best_cost:
            best_cost = cost
            best_thr = (x[i] + x[i + 1]) / 2.0
            best_nl = nl
    if best_nl < 0:
        return None
    return best_cost, best_thr, best_nl


def scan_grad(cnp.float64_t[::1] x, cnp.float64_t[::1] g, cnp.float64_t[::1] h,
              double lam, Py_ssize_t min_leaf, double min_child_weight):
    cdef Py_ssize_t n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    cdef Py_ssize_t i, nl, nr, best_nl = -1
    cdef double gtot = 0.0, htot = 0.0, gl = 0.0, hl = 0.0, gr, hr
    cdef double score, best_score = -np.inf, best_thr = 0.0
    cdef double best_gl = 0.0, best_hl = 0.0
    for i in range(n):
        gtot += g[i]
        htot += h[i]
    for i in range(n - 1):
        gl += g[i]
        hl += h[i]
        nl = i + 1
        nr = n - nl
        if x[i + 1] == x[i]:
            continue
        if nl < min_leaf or nr < min_leaf:
            continue
        if hl < min_child_weight:
            continue
        gr = gtot - gl
        hr = htot - hl
        if hr < min_child_weight:
            continue
        score = (gl * gl) / (hl + lam) + (gr * gr) / (hr + lam)
        if score > best_score:
            best_score = score
            best_thr = (x[i] + x[i + 1]) / 2.0
            best_nl = nl
            best_gl = gl
            best_hl = hl
    if best_nl < 0:
        return None
    return best_score, best_thr, best_nl, best_gl, best_hl
