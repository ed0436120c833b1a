# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split-scan kernels.

Semantics mirror ``fallback.py`` exactly: sorted input, leftmost tie win,
midpoint thresholds guarded against rounding onto the right value.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, NAN, log2

CRITERION_GINI = 0
CRITERION_ENTROPY = 1


cdef inline double _gini(double p) nogil:
    cdef double q = 1.0 - p
    return 1.0 - p * p - q * q


cdef inline double _entropy(double p) nogil:
    cdef double q = 1.0 - p
    cdef double term_p = p * log2(p) if p > 0.0 else 0.0
    cdef double term_q = q * log2(q) if q > 0.0 else 0.0
    return -(term_p + term_q)


cdef inline double _threshold(double lo, double hi) nogil:
    cdef double mid = 0.5 * (lo + hi)
    return mid if mid < hi else lo


def best_split_class(double[::1] values, double[::1] labels,
                     Py_ssize_t min_leaf, int criterion):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return (-INFINITY, NAN)
    cdef double total_pos = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total_pos += labels[i]
    cdef double p_all = total_pos / n
    cdef double imp_all = _gini(p_all) if criterion == CRITERION_GINI else _entropy(p_all)
    cdef double pos_left = 0.0
    cdef double best_gain = -INFINITY
    cdef double best_thr = NAN
    cdef double nl, nr, p_left, p_right, imp_left, imp_right, gain
    cdef Py_ssize_t k
    for k in range(n - 1):
        pos_left += labels[k]
        nl = <double> (k + 1)
        nr = <double> (n - k - 1)
        if nl < min_leaf or nr < min_leaf:
            continue
        if not values[k + 1] > values[k]:
            continue
        p_left = pos_left / nl
        p_right = (total_pos - pos_left) / nr
        if criterion == CRITERION_GINI:
            imp_left = _gini(p_left)
            imp_right = _gini(p_right)
        else:
            imp_left = _entropy(p_left)
            imp_right = _entropy(p_right)
        gain = imp_all - (nl / n) * imp_left - (nr / n) * imp_right
        if gain > best_gain:
            best_gain = gain
            best_thr = _threshold(values[k], values[k + 1])
    if best_gain == -INFINITY:
        return (-INFINITY, NAN)
    return (best_gain, best_thr)


def best_split_variance(double[::1] values, double[::1] targets,
                        Py_ssize_t min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return (-INFINITY, NAN)
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        total += targets[i]
    cdef double sum_left = 0.0
    cdef double best_gain = -INFINITY
    cdef double best_thr = NAN
    cdef double nl, nr, sum_right, gain
    cdef Py_ssize_t k
    for k in range(n - 1):
        sum_left += targets[k]
        nl = <double> (k + 1)
        nr = <double> (n - k - 1)
        if nl < min_leaf or nr < min_leaf:
            continue
        if not values[k + 1] > values[k]:
            continue
        sum_right = total - sum_left
        gain = (sum_left * sum_left / nl
                + sum_right * sum_right / nr
                - total * total / n)
        if gain > best_gain:
            best_gain = gain
            best_thr = _threshold(values[k], values[k + 1])
    if best_gain == -INFINITY:
        return (-INFINITY, NAN)
    return (best_gain, best_thr)


def best_split_gradhess(double[::1] values, double[::1] grad, double[::1] hess,
                        double lam, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = values.shape[0]
    if n < 2 * min_leaf:
        return (-INFINITY, NAN)
    cdef double g_total = 0.0
    cdef double h_total = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        g_total += grad[i]
        h_total += hess[i]
    cdef double g_left = 0.0
    cdef double h_left = 0.0
    cdef double best_gain = -INFINITY
    cdef double best_thr = NAN
    cdef double nl, nr, g_right, h_right, gain
    cdef Py_ssize_t k
    for k in range(n - 1):
        g_left += grad[k]
        h_left += hess[k]
        nl = <double> (k + 1)
        nr = <double> (n - k - 1)
        if nl < min_leaf or nr < min_leaf:
            continue
        if not values[k + 1] > values[k]:
            continue
        g_right = g_total - g_left
        h_right = h_total - h_left
        gain = 0.5 * (g_left * g_left / (h_left + lam)
                      + g_right * g_right / (h_right + lam)
                      - g_total * g_total / (h_total + lam))
        if gain > best_gain:
            best_gain = gain
            best_thr = _threshold(values[k], values[k + 1])
    if best_gain == -INFINITY:
        return (-INFINITY, NAN)
    return (best_gain, best_thr)
