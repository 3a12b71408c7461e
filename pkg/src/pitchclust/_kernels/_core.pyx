# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Mirrors pitchclust._kernels._py; see that module for the semantic contract
(tie-breaking, update order). Keep both implementations in lockstep.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def pam_build(double[:, ::1] D, Py_ssize_t k):
    # near-ties (relative 1e-9) break toward the lowest index; keep in
    # lockstep with the _py backend
    cdef Py_ssize_t n = D.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] medoids = np.empty(k, dtype=np.int64)
    cdef double[::1] ndist = np.empty(n, dtype=np.float64)
    cdef double[::1] scratch = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] chosen = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i, j, t, first, best_j
    cdef double total, best_total, gain, best_gain, diff, tol

    best_total = -1.0
    for j in range(n):
        total = 0.0
        for i in range(n):
            total += D[i, j]
        scratch[j] = total
        if best_total < 0.0 or total < best_total:
            best_total = total
    tol = 1e-9 * (1.0 + (best_total if best_total > 0 else -best_total))
    first = 0
    for j in range(n):
        if scratch[j] <= best_total + tol:
            first = j
            break
    medoids[0] = first
    chosen[first] = 1
    for i in range(n):
        ndist[i] = D[i, first]

    for t in range(1, k):
        best_gain = -1.0
        for j in range(n):
            if chosen[j]:
                scratch[j] = -1.0
                continue
            gain = 0.0
            for i in range(n):
                diff = ndist[i] - D[i, j]
                if diff > 0.0:
                    gain += diff
            scratch[j] = gain
            if best_gain < 0.0 or gain > best_gain:
                best_gain = gain
        tol = 1e-9 * (1.0 + (best_gain if best_gain > 0 else -best_gain))
        best_j = -1
        for j in range(n):
            if not chosen[j] and scratch[j] >= best_gain - tol:
                best_j = j
                break
        medoids[t] = best_j
        chosen[best_j] = 1
        for i in range(n):
            if D[i, best_j] < ndist[i]:
                ndist[i] = D[i, best_j]
    return medoids


def pam_swap(double[:, ::1] D, medoids):
    cdef Py_ssize_t n = D.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] meds = np.sort(
        np.asarray(medoids, dtype=np.int64))
    cdef Py_ssize_t k = meds.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] npos_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ndist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sdist_arr = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] is_med = np.zeros(n, dtype=np.uint8)
    cdef long long[::1] mv
    cdef long long[::1] npos = npos_arr
    cdef double[::1] ndist = ndist_arr
    cdef double[::1] sdist = sdist_arr
    cdef Py_ssize_t i, mi, h, best_mi, best_h
    cdef double objective, d, nd, sd, newtd, delta, best_delta, base
    cdef double inf = np.inf

    while True:
        mv = meds
        for i in range(n):
            is_med[i] = 0
        for mi in range(k):
            is_med[mv[mi]] = 1
        objective = 0.0
        for i in range(n):
            nd = inf
            sd = inf
            for mi in range(k):
                d = D[i, mv[mi]]
                if d < nd:
                    sd = nd
                    nd = d
                    npos[i] = mi
                elif d < sd:
                    sd = d
            ndist[i] = nd
            sdist[i] = sd
            objective += nd
        if k == n:
            return meds, objective

        # pass 1: best delta; pass 2: first candidate within tolerance of it
        tol = 1e-9 * (1.0 + objective)
        best_delta = 0.0
        for mi in range(k):
            for h in range(n):
                if is_med[h]:
                    continue
                newtd = 0.0
                for i in range(n):
                    base = sdist[i] if npos[i] == mi else ndist[i]
                    d = D[i, h]
                    newtd += d if d < base else base
                delta = newtd - objective
                if delta < best_delta:
                    best_delta = delta
        if best_delta >= -tol:
            return meds, objective
        best_mi = -1
        best_h = -1
        for mi in range(k):
            if best_mi >= 0:
                break
            for h in range(n):
                if is_med[h]:
                    continue
                newtd = 0.0
                for i in range(n):
                    base = sdist[i] if npos[i] == mi else ndist[i]
                    d = D[i, h]
                    newtd += d if d < base else base
                delta = newtd - objective
                if delta <= best_delta + tol:
                    best_mi = mi
                    best_h = h
                    break
        meds[best_mi] = best_h
        meds = np.sort(meds)


def attach_sequential(double[:, ::1] D, seeds, order, int mode):
    cdef Py_ssize_t n = D.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] seeds_arr = np.asarray(seeds, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.asarray(order, dtype=np.int64)
    cdef Py_ssize_t k = seeds_arr.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] labels = labels_arr
    cdef long long[::1] sv = seeds_arr
    cdef long long[::1] ov = order_arr
    cdef double[:, ::1] stat = np.empty((k, n), dtype=np.float64)
    cdef long long[::1] counts = np.ones(k, dtype=np.int64)
    cdef Py_ssize_t c, j, t, p, best_c
    cdef double v, best_v

    for c in range(k):
        labels[sv[c]] = c + 1
        for j in range(n):
            stat[c, j] = D[sv[c], j]
    for t in range(order_arr.shape[0]):
        p = ov[t]
        best_c = 0
        best_v = stat[0, p] / counts[0] if mode == 2 else stat[0, p]
        for c in range(1, k):
            v = stat[c, p] / counts[c] if mode == 2 else stat[c, p]
            if v < best_v:
                best_v = v
                best_c = c
        labels[p] = best_c + 1
        if mode == 0:
            for j in range(n):
                if D[p, j] < stat[best_c, j]:
                    stat[best_c, j] = D[p, j]
        elif mode == 1:
            for j in range(n):
                if D[p, j] > stat[best_c, j]:
                    stat[best_c, j] = D[p, j]
        else:
            for j in range(n):
                stat[best_c, j] += D[p, j]
            counts[best_c] += 1
    return labels_arr


def comembership_diff(labels1, labels2):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] a = np.ascontiguousarray(labels1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] b = np.ascontiguousarray(labels2, dtype=np.int64)
    cdef long long[::1] l1 = a
    cdef long long[::1] l2 = b
    cdef Py_ssize_t n = l1.shape[0]
    cdef Py_ssize_t i, j
    cdef long long count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if (l1[i] == l1[j]) != (l2[i] == l2[j]):
                count += 1
    return int(2 * count)
