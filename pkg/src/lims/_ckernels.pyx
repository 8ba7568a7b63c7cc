# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: edit distance, rank prediction, exponential search."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef fused key_t:
    double
    cnp.uint64_t


cdef inline Py_ssize_t _min3(Py_ssize_t a, Py_ssize_t b, Py_ssize_t c) nogil:
    if b < a:
        a = b
    if c < a:
        a = c
    return a


cdef extern from *:
    """
    typedef unsigned __int128 lims_u128;
    """
    ctypedef unsigned long long lims_u128  # real type is 128-bit; see verbatim C above

cdef enum:
    MAX_BITS = 128


cdef inline bint _build_peq(str p, lims_u128 *peq):
    """Match masks of ``p`` per byte value; False if ``p`` cannot use the bit-parallel path."""
    cdef Py_ssize_t i, m = len(p)
    cdef Py_UCS4 c
    if m == 0 or m > MAX_BITS:
        return False
    for i in range(256):
        peq[i] = 0
    for i in range(m):
        c = p[i]
        if c > 255:
            return False
        peq[c] |= (<lims_u128> 1) << i
    return True


cdef inline Py_ssize_t _myers(lims_u128 *peq, Py_ssize_t m, str t):
    # Bit-parallel Levenshtein (Myers, with Hyyro's global-distance adjustment)
    cdef lims_u128 pv = ~(<lims_u128> 0), mv = 0, eq, xv, xh, ph, mh
    cdef lims_u128 top = (<lims_u128> 1) << (m - 1)
    cdef Py_ssize_t score = m, j, n = len(t)
    cdef Py_UCS4 c
    for j in range(n):
        c = t[j]
        eq = peq[c] if c < 256 else 0
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = (ph << 1) | 1
        mh = mh << 1
        pv = mh | ~(xv | ph)
        mv = ph & xv
    return score


def edit_distance(str s, str t):
    cdef lims_u128 peq[256]
    if s != t and len(s) and len(t):
        if _build_peq(s, peq):
            return _myers(peq, len(s), t)
        if _build_peq(t, peq):
            return _myers(peq, len(t), s)
    return _edit_dp(s, t)


def _edit_dp(str s, str t):
    cdef Py_ssize_t ls = len(s), lt = len(t)
    cdef Py_ssize_t i, j, cost, diag, tmp
    cdef Py_ssize_t *row
    cdef Py_UCS4 *tb
    cdef Py_UCS4 cs
    if s == t:
        return 0
    if ls < lt:
        s, t = t, s
        ls, lt = lt, ls
    if lt == 0:
        return ls
    row = <Py_ssize_t *> malloc((lt + 1) * sizeof(Py_ssize_t))
    tb = <Py_UCS4 *> malloc(lt * sizeof(Py_UCS4))
    if row == NULL or tb == NULL:
        free(row)
        free(tb)
        raise MemoryError()
    try:
        for j in range(lt):
            tb[j] = t[j]
        for j in range(lt + 1):
            row[j] = j
        for i in range(1, ls + 1):
            cs = s[i - 1]
            diag = row[0]
            row[0] = i
            for j in range(1, lt + 1):
                cost = 0 if cs == tb[j - 1] else 1
                tmp = row[j]
                row[j] = _min3(row[j] + 1, row[j - 1] + 1, diag + cost)
                diag = tmp
        return row[lt]
    finally:
        free(row)
        free(tb)


def edit_distance_many(str q, items):
    cdef Py_ssize_t i, n = len(items)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef lims_u128 peq[256]
    cdef Py_ssize_t m = len(q)
    cdef str t
    if not _build_peq(q, peq):
        for i in range(n):
            out[i] = _edit_dp(q, items[i])
        return out
    for i in range(n):
        t = items[i]
        out[i] = _myers(peq, m, t)
    return out


cdef inline double _cheb(const double[:] c, double key_min, double key_max,
                         Py_ssize_t n, double x) nogil:
    cdef Py_ssize_t k, deg = c.shape[0] - 1
    cdef double span = key_max - key_min
    cdef double t, b1 = 0.0, b2 = 0.0, tmp, y
    cdef double hi = <double>(n - 1) if n > 0 else 0.0
    # keys outside the trained range sit at the ends of the rank range
    if x < key_min:
        return 0.0
    if x > key_max:
        return hi
    if span > 0:
        t = 2.0 * (x - key_min) / span - 1.0
    else:
        t = -1.0
    if t < -1.0:
        t = -1.0
    elif t > 1.0:
        t = 1.0
    k = deg
    while k > 0:
        tmp = 2.0 * t * b1 - b2 + c[k]
        b2 = b1
        b1 = tmp
        k -= 1
    y = t * b1 - b2 + c[0]
    if y < 0.0 or y != y:
        return 0.0
    if y > hi:
        return hi
    return y


def cheb_predict(const double[:] coeffs, double key_min, double key_max, Py_ssize_t n, double x):
    return _cheb(coeffs, key_min, key_max, n, x)


cdef inline Py_ssize_t _first_geq(const key_t[:] arr, double start, key_t x, Py_ssize_t *probes) nogil:
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t s, lo, hi, step, mid
    if n == 0:
        probes[0] = 0
        return 0
    s = <Py_ssize_t>(start + 0.5) if start > 0 else 0
    if s > n - 1:
        s = n - 1
    probes[0] = 1
    if arr[s] < x:
        lo = s
        hi = n
        step = 1
        while s + step < n:
            probes[0] += 1
            if arr[s + step] < x:
                lo = s + step
                step <<= 1
            else:
                hi = s + step
                break
    else:
        hi = s
        lo = -1
        step = 1
        while s - step >= 0:
            probes[0] += 1
            if arr[s - step] >= x:
                hi = s - step
                step <<= 1
            else:
                lo = s - step
                break
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        probes[0] += 1
        if arr[mid] < x:
            lo = mid
        else:
            hi = mid
    return hi


cdef inline Py_ssize_t _last_eq(const key_t[:] arr, double start, key_t x) nogil:
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t s, lo, hi, step, mid
    if n == 0:
        return -1
    s = <Py_ssize_t>(start + 0.5) if start > 0 else 0
    if s > n - 1:
        s = n - 1
    if arr[s] <= x:
        lo = s
        hi = n
        step = 1
        while s + step < n:
            if arr[s + step] <= x:
                lo = s + step
                step <<= 1
            else:
                hi = s + step
                break
    else:
        hi = s
        lo = -1
        step = 1
        while s - step >= 0:
            if arr[s - step] > x:
                hi = s - step
                step <<= 1
            else:
                lo = s - step
                break
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if arr[mid] <= x:
            lo = mid
        else:
            hi = mid
    if lo >= 0 and arr[lo] == x:
        return lo
    return -1


def search_first_geq(const key_t[:] arr, double start, key_t x):
    cdef Py_ssize_t probes = 0
    cdef Py_ssize_t idx = _first_geq(arr, start, x, &probes)
    return idx, probes


def search_last_occurrence(const key_t[:] arr, double start, key_t x):
    return _last_eq(arr, start, x)


def locate_first_geq(const double[:] coeffs, double key_min, double key_max, const key_t[:] arr, key_t x):
    cdef Py_ssize_t probes = 0
    cdef double start = _cheb(coeffs, key_min, key_max, arr.shape[0], <double>x)
    return _first_geq(arr, start, x, &probes)


def locate_ranges(const double[:] coeffs, double key_min, double key_max,
                  const key_t[:] keys, const key_t[:] lefts, const key_t[:] rights):
    cdef Py_ssize_t i, m = lefts.shape[0], n = keys.shape[0]
    cdef Py_ssize_t probes = 0, lo, hi
    cdef key_t left, right
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lb = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ub = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[:] lbv = lb
    cdef cnp.int64_t[:] ubv = ub
    with nogil:
        for i in range(m):
            left = lefts[i]
            right = rights[i]
            lo = _first_geq(keys, _cheb(coeffs, key_min, key_max, n, <double>left), left, &probes)
            hi = _first_geq(keys, _cheb(coeffs, key_min, key_max, n, <double>right), right, &probes)
            if hi < n and keys[hi] == right:
                hi = _last_eq(keys, <double>hi, right)
            else:
                hi -= 1
            lbv[i] = lo
            ubv[i] = hi
    return lb, ub


def locate_many(const double[:] coeffs, double key_min, double key_max, const key_t[:] arr, const key_t[:] xs):
    cdef Py_ssize_t i, m = xs.shape[0], probes = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[:] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _first_geq(arr, _cheb(coeffs, key_min, key_max, arr.shape[0], <double>xs[i]),
                               xs[i], &probes)
    return out


cdef inline Py_ssize_t _binary(const key_t[:] arr, key_t x) nogil:
    cdef Py_ssize_t lo = 0, hi = arr.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def binary_first_geq(const key_t[:] arr, key_t x):
    return _binary(arr, x)


def binary_many(const key_t[:] arr, const key_t[:] xs):
    cdef Py_ssize_t i, m = xs.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[:] ov = out
    with nogil:
        for i in range(m):
            ov[i] = _binary(arr, xs[i])
    return out
