"""Clustering, pivot selection, and the choice of the number of clusters."""

from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    pass


@dataclass
class Clustering:
    K: int
    centers: np.ndarray      # dataset positions of the centers
    assignment: np.ndarray   # dataset position -> cluster index in [0, K)
    center_dist: np.ndarray  # distance of every object to its own center

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == i)


def k_center(dataset, K: int, seed: int) -> Clustering:
    """Greedy farthest-point k-center (2-approximation).

    The first center is a seeded draw; each later center is the object farthest
    from the centers chosen so far. Ties go to the lowest position.
    """
    n = len(dataset)
    if K < 1 or K > n:
        raise ParameterError(f"K={K} must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    centers = np.empty(K, dtype=np.int64)
    centers[0] = rng.integers(n)
    nearest = dataset.distances_to(dataset.payload(centers[0]))
    assignment = np.zeros(n, dtype=np.int64)
    for c in range(1, K):
        nxt = int(np.argmax(nearest))
        centers[c] = nxt
        d = dataset.distances_to(dataset.payload(nxt))
        closer = d < nearest
        assignment[closer] = c
        nearest = np.where(closer, d, nearest)
    # a center is at distance 0 from itself; pin it in case of duplicates
    assignment[centers] = np.arange(K)
    nearest[centers] = 0.0
    return Clustering(K, centers, assignment, nearest)


def fft_pivots(members, center, m: int, dist_many) -> list:
    """Farthest-first traversal inside a cluster.

    ``members`` are dataset positions, ``center`` one of them, and
    ``dist_many(pos, positions)`` returns distances from one member to many.
    The first pivot is the center; each next pivot maximizes its minimum
    distance to the pivots already chosen.
    """
    members = np.asarray(members)
    if m < 1 or m > len(members):
        raise ParameterError(f"m={m} must lie in [1, {len(members)}]")
    pivots = [int(center)]
    mind = dist_many(center, members)
    for _ in range(1, m):
        nxt = int(members[int(np.argmax(mind))])
        pivots.append(nxt)
        mind = np.minimum(mind, dist_many(nxt, members))
    return pivots


def overlap_lengths(center_dist, dist_max, dist_min) -> np.ndarray:
    """Pairwise overlap length between clusters, clamped at zero.

    ``center_dist[i, i2]`` is the distance between centroids; ``dist_max`` and
    ``dist_min`` are each cluster's extreme distances from its own centroid.
    """
    cd = np.asarray(center_dist, dtype=np.float64)
    dmax = np.asarray(dist_max, dtype=np.float64)
    dmin = np.asarray(dist_min, dtype=np.float64)
    upper = np.minimum(cd + dmax[None, :], dmax[:, None])
    lower = np.maximum(cd - dmax[None, :], dmin[:, None])
    r = np.maximum(upper - lower, 0.0)
    np.fill_diagonal(r, 0.0)
    return r


def overlap_rate(center_dist, dist_max, dist_min) -> float:
    """Mean relative overlap over ordered cluster pairs."""
    K = len(dist_max)
    if K < 2:
        raise ParameterError("overlap rate needs at least two clusters")
    r = overlap_lengths(center_dist, dist_max, dist_min)
    dmax = np.asarray(dist_max, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(dmax[:, None] > 0, r / dmax[:, None], 0.0)
    return float(rel.sum() / (K * (K - 1)))


def linear_fit(keys):
    """Closed-form least-squares line through ``(key, rank(key))``."""
    x = np.asarray(keys, dtype=np.float64)
    y = np.searchsorted(x, x, side="left").astype(np.float64)
    xm = x.mean()
    ym = y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        return 0.0, ym
    a = float(((x - xm) * (y - ym)).sum()) / sxx
    return a, ym - a * xm


def mae(sorted_lists, n_total: int, m: int) -> float:
    """Mean absolute rank error of per-pivot linear fits.

    ``sorted_lists`` is an iterable of sorted distance arrays (one per cluster
    and pivot); empty arrays contribute nothing.
    """
    total = 0.0
    for keys in sorted_lists:
        keys = np.asarray(keys, dtype=np.float64)
        if len(keys) == 0:
            continue
        a, b = linear_fit(keys)
        ranks = np.searchsorted(keys, keys, side="left")
        total += float(np.abs(a * keys + b - ranks).sum())
    return total / (m * n_total)


def clustering_stats(dataset, K: int, m: int, seed: int):
    """OR and MAE for one candidate K."""
    cl = k_center(dataset, K, seed)
    center_payloads = dataset.payload(cl.centers)
    center_dist = np.stack([dataset.metric.many(dataset.payload(c), center_payloads) for c in cl.centers]) \
        if K > 1 else np.zeros((1, 1))
    dmax = np.zeros(K)
    dmin = np.zeros(K)
    lists = []
    for i in range(K):
        mem = cl.members(i)
        cdist = np.sort(cl.center_dist[mem])
        dmax[i] = cdist[-1]
        dmin[i] = cdist[0]
        piv = fft_pivots(mem, cl.centers[i], min(m, len(mem)), dataset.dist_many)
        lists.append(cdist)
        for p in piv[1:]:
            lists.append(np.sort(dataset.dist_many(p, mem)))
    return overlap_rate(center_dist, dmax, dmin), mae(lists, len(dataset), m)


def elbow(xs, ys) -> int:
    """Index of the interior point farthest from the first-to-last chord.

    Both axes are rescaled to [0, 1] first. Ties resolve to the smallest x.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) < 3:
        raise ParameterError("elbow detection needs at least three candidates")
    xr = xs.max() - xs.min()
    yr = ys.max() - ys.min()
    xn = (xs - xs.min()) / xr if xr > 0 else np.zeros_like(xs)
    yn = (ys - ys.min()) / yr if yr > 0 else np.zeros_like(ys)
    dx = xn[-1] - xn[0]
    dy = yn[-1] - yn[0]
    norm = np.hypot(dx, dy)
    if norm == 0:
        return 1
    dist = np.abs(dy * (xn - xn[0]) - dx * (yn - yn[0])) / norm
    inner = dist[1:-1]
    best = inner.max()
    return 1 + int(np.flatnonzero(inner >= best - 1e-12)[0])


def select_k(dataset, candidates, m: int = 3, seed: int = 0, return_curve: bool = False):
    """Choose K at the elbow of ``OR(K) + MAE(K) / max MAE``."""
    candidates = list(candidates)
    if len(candidates) < 3:
        raise ParameterError("select_k needs at least three candidate values")
    if sorted(candidates) != candidates:
        raise ParameterError("candidates must be sorted ascending")
    stats = [clustering_stats(dataset, K, m, seed) for K in candidates]
    ors = np.array([s[0] for s in stats])
    maes = np.array([s[1] for s in stats])
    lam = 1.0 / maes.max() if maes.max() > 0 else 0.0
    score = ors + lam * maes
    k = candidates[elbow(candidates, score)]
    if return_curve:
        return k, {"K": candidates, "OR": ors, "MAE": maes, "score": score}
    return k
