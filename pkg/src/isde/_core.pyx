# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the hot loops.

Same contracts as ``isde._core_py``: mirror-image kernel sums with exact
support pruning (bit-identical to the unpruned triple sum) and the exact
set-partition DP with deterministic tie-breaking.
"""

from libc.math cimport pow

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAX_COORDS = 32


cdef inline double kern(int kid, double u) noexcept nogil:
    if u < 0.0:
        u = -u
    if kid == 0:  # parabolic
        if u <= 1.0:
            return 0.75 * (1.0 - u * u)
        return 0.0
    if kid == 1:  # triangular
        if u <= 1.0:
            return 1.0 - u
        return 0.0
    if u < 1.0:  # box, zero at the support edge
        return 0.5
    return 0.0


cdef inline double reflect(int a, double w) noexcept nogil:
    if a == -1:
        return -w
    if a == 1:
        return 2.0 - w
    return w


def kde_eval(points, samples, double h, int kernel_id, bint mirror, bint prune):
    """Plain or mirror-image product-kernel density sums at many points."""
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] smp = np.ascontiguousarray(samples, dtype=np.float64)
    cdef Py_ssize_t q = pts.shape[0]
    cdef Py_ssize_t p = pts.shape[1]
    cdef Py_ssize_t m = smp.shape[0]
    if p > MAX_COORDS:
        raise ValueError(f"at most {MAX_COORDS} coordinates supported, got {p}")

    out_arr = np.zeros(q, dtype=np.float64)
    cdef double[::1] out = out_arr
    if q == 0:
        return out_arr

    cdef double norm = m * pow(h, <double> p)
    cdef double xv[MAX_COORDS]
    cdef int cand[MAX_COORDS][3]
    cdef int ncand[MAX_COORDS]
    cdef int pos[MAX_COORDS]
    cdef Py_ssize_t j, i, k
    cdef int kk, nc, a
    cdef bint inside
    cdef double total, acc, prod, v, x, w

    with nogil:
        for j in range(q):
            if not mirror:
                total = 0.0
                for i in range(m):
                    prod = 1.0
                    for k in range(p):
                        v = kern(kernel_id, (smp[i, k] - pts[j, k]) / h)
                        if v == 0.0:
                            prod = 0.0
                            break
                        prod *= v
                    total += prod
                out[j] = total / norm
                continue

            inside = True
            for k in range(p):
                x = pts[j, k]
                if x < 0.0 or x > 1.0:
                    inside = False
                    break
            if not inside:
                out[j] = 0.0
                continue

            for k in range(p):
                x = pts[j, k]
                xv[k] = x
                nc = 0
                if (not prune) or x <= h:
                    cand[k][nc] = -1
                    nc += 1
                cand[k][nc] = 0
                nc += 1
                if (not prune) or x >= 1.0 - h:
                    cand[k][nc] = 1
                    nc += 1
                ncand[k] = nc
                pos[k] = 0

            total = 0.0
            while True:
                acc = 0.0
                for i in range(m):
                    prod = 1.0
                    for k in range(p):
                        a = cand[k][pos[k]]
                        w = reflect(a, smp[i, k])
                        v = kern(kernel_id, (w - xv[k]) / h)
                        if v == 0.0:
                            prod = 0.0
                            break
                        prod *= v
                    acc += prod
                total += acc
                kk = <int> p - 1
                while kk >= 0:
                    pos[kk] += 1
                    if pos[kk] < ncand[kk]:
                        break
                    pos[kk] = 0
                    kk -= 1
                if kk < 0:
                    break
            out[j] = total / norm

    return out_arr


cdef inline bint lex_less(long long a, long long b) noexcept nogil:
    cdef long long x, c, above
    if a == b:
        return False
    x = a ^ b
    c = x & (-x)
    above = ~((c << 1) - 1)
    if a & c:
        return (b & above) != 0
    return (a & above) == 0


def dp_solve(int d, block_masks, block_scores, group_offsets):
    """Exact set-partition DP over bitmask states; see the Python backend."""
    cdef const cnp.int64_t[::1] masks = np.ascontiguousarray(block_masks, dtype=np.int64)
    cdef const double[::1] scores = np.ascontiguousarray(block_scores, dtype=np.float64)
    cdef const cnp.int64_t[::1] offsets = np.ascontiguousarray(group_offsets, dtype=np.int64)

    cdef Py_ssize_t n_states = (<Py_ssize_t> 1) << d
    best_arr = np.zeros(n_states, dtype=np.float64)
    first_arr = np.full(n_states, -1, dtype=np.int64)
    count_arr = np.zeros(n_states, dtype=np.int32)
    cdef double[::1] best = best_arr
    cdef cnp.int64_t[::1] first = first_arr
    cdef cnp.int32_t[::1] count = count_arr

    cdef Py_ssize_t state, idx
    cdef long long s, rest, stt
    cdef double cand, cur_score
    cdef long long cur_first
    cdef int f
    cdef cnp.int32_t ccnt, cur_count

    with nogil:
        for state in range(1, n_states):
            stt = <long long> state
            f = 0
            while not (stt >> f) & 1:
                f += 1
            cur_score = 0.0
            cur_first = -1
            cur_count = 0
            for idx in range(offsets[f], offsets[f + 1]):
                s = masks[idx]
                if s & ~stt:
                    continue
                rest = stt ^ s
                cand = scores[idx] + best[rest]
                ccnt = count[rest] + 1
                if (
                    cur_first == -1
                    or cand > cur_score
                    or (
                        cand == cur_score
                        and (
                            ccnt > cur_count
                            or (ccnt == cur_count and lex_less(s, cur_first))
                        )
                    )
                ):
                    cur_score = cand
                    cur_first = s
                    cur_count = ccnt
            best[state] = cur_score
            first[state] = cur_first
            count[state] = cur_count

    return best_arr, first_arr, count_arr
