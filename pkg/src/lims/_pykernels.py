"""Pure-Python versions of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when the
extension is not built or ``LIMS_PURE_PYTHON=1`` is set.
"""

import numpy as np


def _peq(p):
    masks = {}
    for i, c in enumerate(p):
        masks[c] = masks.get(c, 0) | (1 << i)
    return masks


def _myers(peq, m, t):
    # Bit-parallel Levenshtein (Myers, with Hyyro's global-distance adjustment);
    # Python ints are unbounded so any pattern length works
    full = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = full, 0, m
    for c in t:
        eq = peq.get(c, 0)
        xv = eq | mv
        xh = ((((eq & pv) + pv) & full) ^ pv) | eq
        ph = mv | (~(xh | pv) & full)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = mh | (~(xv | ph) & full)
        mv = ph & xv
    return score


def edit_distance(s, t):
    if s == t:
        return 0
    if not s or not t:
        return len(s) + len(t)
    return _myers(_peq(s), len(s), t)


def edit_distance_dp(s, t):
    """Two-row dynamic program; reference for the bit-parallel version."""
    if s == t:
        return 0
    if len(s) < len(t):
        s, t = t, s
    if not t:
        return len(s)
    prev = list(range(len(t) + 1))
    for i, cs in enumerate(s, 1):
        cur = [i]
        for j, ct in enumerate(t, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (cs != ct)))
        prev = cur
    return prev[-1]


def edit_distance_many(q, items):
    out = np.empty(len(items), dtype=np.float64)
    if not q:
        for i, s in enumerate(items):
            out[i] = len(s)
        return out
    peq = _peq(q)
    m = len(q)
    for i, s in enumerate(items):
        out[i] = _myers(peq, m, s) if s != q else 0
    return out


def cheb_predict(coeffs, key_min, key_max, n, x):
    """Evaluate a Chebyshev series at the normalized key and clamp to [0, n-1]."""
    deg = len(coeffs) - 1
    span = key_max - key_min
    hi = n - 1 if n > 0 else 0
    # keys outside the trained range sit at the ends of the rank range
    if x < key_min:
        return 0.0
    if x > key_max:
        return float(hi)
    if span > 0:
        t = 2.0 * (x - key_min) / span - 1.0
    else:
        t = -1.0
    if t < -1.0:
        t = -1.0
    elif t > 1.0:
        t = 1.0
    # Clenshaw recurrence
    b1 = 0.0
    b2 = 0.0
    for k in range(deg, 0, -1):
        b1, b2 = 2.0 * t * b1 - b2 + coeffs[k], b1
    y = t * b1 - b2 + coeffs[0]
    if y < 0.0 or y != y:
        return 0.0
    if y > hi:
        return float(hi)
    return y


def search_first_geq(arr, start, x):
    """Exponential search for the first index with ``arr[i] >= x``.

    Returns ``(index, probes)``; ``index == len(arr)`` when every key is smaller.
    """
    n = len(arr)
    if n == 0:
        return 0, 0
    s = int(start + 0.5) if start > 0 else 0
    if s > n - 1:
        s = n - 1
    probes = 1
    if arr[s] < x:
        lo = s
        hi = n
        step = 1
        while s + step < n:
            probes += 1
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
            probes += 1
            if arr[s - step] >= x:
                hi = s - step
                step <<= 1
            else:
                lo = s - step
                break
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        probes += 1
        if arr[mid] < x:
            lo = mid
        else:
            hi = mid
    return hi, probes


def search_last_occurrence(arr, start, x):
    """Index of the last element equal to ``x``, or -1 when ``x`` is absent."""
    n = len(arr)
    if n == 0:
        return -1
    # last occurrence == first index with arr[i] > x, minus one
    s = int(start + 0.5) if start > 0 else 0
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


def locate_first_geq(coeffs, key_min, key_max, arr, x):
    n = len(arr)
    start = cheb_predict(coeffs, key_min, key_max, n, float(x))
    return search_first_geq(arr, start, x)[0]


def locate_ranges(coeffs, key_min, key_max, keys, lefts, rights):
    """Resolve inclusive key ranges to inclusive slot bounds.

    For each range, ``lb`` is the first slot with key >= left and ``ub`` the last
    slot with key <= right. Empty ranges come back with ``lb > ub``.
    """
    n = len(keys)
    m = len(lefts)
    lb = np.empty(m, dtype=np.int64)
    ub = np.empty(m, dtype=np.int64)
    for i in range(m):
        left = lefts[i]
        right = rights[i]
        lo = search_first_geq(keys, cheb_predict(coeffs, key_min, key_max, n, float(left)), left)[0]
        pred = cheb_predict(coeffs, key_min, key_max, n, float(right))
        hi = search_first_geq(keys, pred, right)[0]
        if hi < n and keys[hi] == right:
            hi = search_last_occurrence(keys, hi, right)
        else:
            hi -= 1
        lb[i] = lo
        ub[i] = hi
    return lb, ub


def locate_many(coeffs, key_min, key_max, arr, xs):
    out = np.empty(len(xs), dtype=np.int64)
    for i in range(len(xs)):
        out[i] = locate_first_geq(coeffs, key_min, key_max, arr, xs[i])
    return out


def binary_first_geq(arr, x):
    lo = 0
    hi = len(arr)
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def binary_many(arr, xs):
    out = np.empty(len(xs), dtype=np.int64)
    for i in range(len(xs)):
        out[i] = binary_first_geq(arr, xs[i])
    return out
