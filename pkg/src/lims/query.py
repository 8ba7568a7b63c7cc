"""Exact point, range and kNN queries with page-access accounting.

A range query runs four stages: ``tri_prune`` drops clusters the query ball
cannot reach, ``area_locate`` turns the ball into per-pivot ring bounds,
``interval_gen`` expands those bounds into LIMS-key ranges, and ``pos_locate``
maps key ranges to pages. The pages are then read and refined with true
distances.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .index import LimsIndex, query_boundary_ranks
from .rank_model import get_locator
from .storage import AccessCounter


@dataclass
class QueryStats:
    pages_read: int = 0
    distance_computations: int = 0
    clusters_pruned: int = 0
    intervals_generated: int = 0
    range_calls: int = 0
    max_reads_per_page: int = 0


@dataclass
class RangeResult:
    ids: np.ndarray
    distances: np.ndarray
    stats: QueryStats = field(default_factory=QueryStats)

    def id_set(self) -> set:
        return set(int(i) for i in self.ids)


@dataclass
class KnnResult:
    ids: np.ndarray
    distances: np.ndarray
    stats: QueryStats = field(default_factory=QueryStats)


def tri_prune(index: LimsIndex, q, r, pivot_dists=None) -> list:
    """Clusters whose pivot distance bounds can intersect the query ball."""
    if pivot_dists is None:
        pivot_dists = index.pivot_distances(q)
    kept = []
    for i, c in enumerate(index.clusters):
        if c.base_empty:
            continue
        dq = pivot_dists[i]
        if np.all(dq <= c.dist_max + r) and np.all(dq >= c.dist_min - r):
            kept.append(i)
    return kept


def area_locate(cluster, dq, r, locator=None):
    """Per-pivot ``(rid_min, rid_max)`` for a cluster, or ``None`` if the band is empty."""
    bounds = []
    for j in range(cluster.m):
        r_min = max(dq[j] - r, cluster.dist_min[j])
        r_max = min(dq[j] + r, cluster.dist_max[j])
        if r_min > r_max:
            return None
        got = query_boundary_ranks(cluster, j, r_min, r_max, locator)
        if got is None:
            return None
        bounds.append((got[2], got[3]))
    return bounds


def interval_gen(bounds, N: int):
    """Inclusive LIMS-key ranges covering every ring tuple inside ``bounds``.

    Each full ring range of the leading pivots is one DAG level; every path
    through the levels fixes a key prefix, and the last pivot contributes a
    single ``[rid_min, rid_max]`` span. Ranges come out in ascending key order.
    """
    prefixes = np.zeros(1, dtype=np.uint64)
    n = np.uint64(N)
    for lo, hi in bounds[:-1]:
        level = np.arange(lo, hi + 1, dtype=np.uint64)
        prefixes = (prefixes[:, None] * n + level[None, :]).ravel()
    lo, hi = bounds[-1]
    lefts = prefixes * n + np.uint64(lo)
    rights = prefixes * n + np.uint64(hi)
    return lefts, rights


def pos_locate(cluster, lefts, rights, omega: int, locator=None):
    """Local page numbers holding any key inside the ranges, ascending and distinct."""
    if cluster.size == 0 or len(lefts) == 0:
        return []
    loc = get_locator(locator)
    lb, ub = loc.key_ranges(cluster.addr_model, cluster.keys, lefts, rights)
    keep = lb <= ub
    if not keep.any():
        return []
    first = lb[keep] // omega
    last = ub[keep] // omega
    pages = set()
    for a, b in zip(first.tolist(), last.tolist()):
        pages.update(range(a, b + 1))
    return sorted(pages)


def buffer_pages(cluster, dq_centroid, r, omega: int):
    """Insert-buffer pages whose records may lie within ``r`` of the query."""
    bd = cluster.buffer_dist
    if len(bd) == 0:
        return []
    lo = int(np.searchsorted(bd, dq_centroid - r, side="left"))
    hi = int(np.searchsorted(bd, dq_centroid + r, side="right")) - 1
    if lo > hi:
        return []
    return list(range(lo // omega, hi // omega + 1))


def _locate_pages(index: LimsIndex, q, r, pivot_dists, locator, stats: QueryStats, trace=None):
    """Page identifiers ``(kind, cluster, page)`` a range query must read."""
    kept = tri_prune(index, q, r, pivot_dists)
    stats.clusters_pruned += sum(1 for c in index.clusters if not c.base_empty) - len(kept)
    if trace is not None:
        trace["kept"] = kept
        trace["bounds"] = {}
        trace["intervals"] = {}
        trace["pages"] = {}
    pages = []
    for i in kept:
        c = index.clusters[i]
        bounds = area_locate(c, pivot_dists[i], r, locator)
        if trace is not None:
            trace["bounds"][i] = bounds
        if bounds is None:
            continue
        lefts, rights = interval_gen(bounds, c.N)
        stats.intervals_generated += len(lefts)
        local = pos_locate(c, lefts, rights, index.omega, locator)
        if trace is not None:
            trace["intervals"][i] = (lefts, rights)
            trace["pages"][i] = local
        pages.extend(("base", i, k) for k in local)
    for i, c in enumerate(index.clusters):
        for k in buffer_pages(c, pivot_dists[i][0], r, index.omega):
            pages.append(("buf", i, k))
    return pages


def _read(index: LimsIndex, page_id, q, counter: AccessCounter, stats: QueryStats, want_payload=False):
    kind, i, k = page_id
    c = index.clusters[i]
    store = c.store if kind == "base" else c.buffer_store
    recs = store.read_page(k, counter, page_id)
    if c.tombstones:
        alive = np.fromiter((int(x) not in c.tombstones for x in recs["id"]), dtype=bool, count=len(recs))
        recs = recs[alive]
    if len(recs) == 0:
        return recs["id"], np.zeros(0), []
    if index.metric.is_vector:
        pays = recs["payload"]
    else:
        pays = [b.decode("ascii") for b in recs["payload"]]
    dist = index.metric.many(q, pays)
    stats.distance_computations += len(recs)
    return recs["id"], dist, (pays if want_payload else None)


def range_query(index: LimsIndex, q, r, locator=None, trace=None) -> RangeResult:
    """All records within distance ``r`` of ``q``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    stats = QueryStats(range_calls=1)
    counter = AccessCounter()
    pivot_dists = index.pivot_distances(q)
    stats.distance_computations += int(index.pivot_offsets[-1])
    pages = _locate_pages(index, q, r, pivot_dists, locator, stats, trace)
    ids, dists = [], []
    for pid in pages:
        rid, d, _ = _read(index, pid, q, counter, stats)
        hit = d <= r
        ids.append(rid[hit])
        dists.append(d[hit])
    stats.pages_read = counter.pages_read
    stats.max_reads_per_page = counter.max_reads_per_page
    if ids:
        ids = np.concatenate(ids).astype(np.int64)
        dists = np.concatenate(dists)
    else:
        ids, dists = np.zeros(0, dtype=np.int64), np.zeros(0)
    return RangeResult(ids, dists, stats)


def point_query(index: LimsIndex, q, locator=None):
    """``(id, payload)`` of the stored record equal to ``q``, or ``None``."""
    stats = QueryStats(range_calls=1)
    counter = AccessCounter()
    pivot_dists = index.pivot_distances(q)
    for pid in _locate_pages(index, q, 0.0, pivot_dists, locator, stats):
        rid, d, pays = _read(index, pid, q, counter, stats, want_payload=True)
        for k in np.flatnonzero(d == 0.0):
            if index.metric.equal(pays[k], q):
                return int(rid[k]), pays[k]
    return None


def knn_query(index: LimsIndex, q, k: int, delta_r: float, locator=None) -> KnnResult:
    """The ``k`` records nearest to ``q`` via range queries of growing radius.

    Radii are ``delta_r, 2*delta_r, ...``. Pages already read are never read
    again. The search stops after the call at radius ``t*delta_r`` once the
    current k-th distance is at most ``(t-1)*delta_r``, which makes the number
    of calls ``ceil(d_k / delta_r) + 1`` for a true k-th distance ``d_k``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not delta_r > 0:
        raise ValueError("delta_r must be positive")
    stats = QueryStats()
    k = min(k, index.n)
    if k == 0:
        return KnnResult(np.zeros(0, dtype=np.int64), np.zeros(0), stats)
    counter = AccessCounter()
    pivot_dists = index.pivot_distances(q)
    stats.distance_computations += int(index.pivot_offsets[-1])
    # max-heap of (-distance, -arrival, id); arrival order settles ties
    heap = [(-math.inf, -i, -1) for i in range(k)]
    heapq.heapify(heap)
    arrival = k
    visited = set()
    t = 0
    while True:
        t += 1
        r = t * delta_r
        pages = _locate_pages(index, q, r, pivot_dists, locator, stats)
        stats.range_calls += 1
        for pid in pages:
            if pid in visited:
                continue
            visited.add(pid)
            rid, d, _ = _read(index, pid, q, counter, stats)
            for rec_id, dist in zip(rid.tolist(), d.tolist()):
                if dist < -heap[0][0]:
                    arrival += 1
                    heapq.heapreplace(heap, (-dist, -arrival, rec_id))
        if -heap[0][0] <= (t - 1) * delta_r:
            break
    stats.pages_read = counter.pages_read
    stats.max_reads_per_page = counter.max_reads_per_page
    best = sorted((-nd, -na, rid) for nd, na, rid in heap)
    return KnnResult(np.array([b[2] for b in best], dtype=np.int64),
                     np.array([b[0] for b in best]), stats)


def default_delta_r(dataset, seed: int = 0, pairs: int = 1000) -> float:
    """Initial kNN radius: 1st percentile of seeded random pairwise distances."""
    n = len(dataset)
    if n < 2:
        raise ValueError("need at least two objects to estimate delta_r")
    rng = np.random.default_rng(seed)
    a = rng.integers(n, size=pairs)
    b = (a + rng.integers(1, n, size=pairs)) % n
    d = np.array([dataset.metric.pair(dataset.payload(i), dataset.payload(j)) for i, j in zip(a, b)])
    est = float(np.percentile(d, 1))
    if est > 0:
        return est
    pos = d[d > 0]
    return float(pos.min()) if len(pos) else 1.0
