# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def lowpass_csr(const cnp.int32_t[::1] indptr, const cnp.int32_t[::1] indices,
                const double[::1] data, X, int k):
    cdef cnp.ndarray[double, ndim=2, mode="c"] cur = np.array(X, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = cur.shape[0], m = cur.shape[1]
    cdef cnp.ndarray[double, ndim=2, mode="c"] nxt = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] a, b
    cdef Py_ssize_t i, c, idx, col
    cdef double w
    cdef int step
    if indptr.shape[0] != n + 1:
        raise ValueError("operator and signal dimensions differ")
    for step in range(k):
        a = cur
        b = nxt
        with nogil:
            for i in range(n):
                for c in range(m):
                    b[i, c] = a[i, c]
                for idx in range(indptr[i], indptr[i + 1]):
                    w = -0.5 * data[idx]
                    col = indices[idx]
                    for c in range(m):
                        b[i, c] += w * a[col, c]
        cur, nxt = nxt, cur
    return cur


def hungarian(cost):
    cdef double[:, ::1] a = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef double[::1] u = np.zeros(n + 1), v = np.zeros(n + 1), minv = np.empty(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef char[::1] used = np.zeros(n + 1, dtype=np.int8)
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = a[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
    col = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] cv = col
    for j in range(1, n + 1):
        cv[p[j] - 1] = j - 1
    return col


def lloyd_step(points, centers):
    cdef double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], dim = P.shape[1], g = C.shape[0]
    labels_arr = np.empty(n, dtype=np.intp)
    dist_arr = np.empty(n, dtype=np.float64)
    sums_arr = np.zeros((g, dim), dtype=np.float64)
    counts_arr = np.zeros(g, dtype=np.intp)
    cdef Py_ssize_t[::1] labels = labels_arr, counts = counts_arr
    cdef double[::1] dist2 = dist_arr
    cdef double[:, ::1] sums = sums_arr
    cdef Py_ssize_t i, c, d, best
    cdef double s, t, bestd
    with nogil:
        for i in range(n):
            best = 0
            bestd = INFINITY
            for c in range(g):
                s = 0.0
                for d in range(dim):
                    t = P[i, d] - C[c, d]
                    s += t * t
                if s < bestd:
                    bestd = s
                    best = c
            labels[i] = best
            dist2[i] = bestd
            counts[best] += 1
            for d in range(dim):
                sums[best, d] += P[i, d]
    return labels_arr, dist_arr, sums_arr, counts_arr
