"""Insertions, deletions and per-cluster rebuilds.

Inserted objects go to a per-cluster buffer kept sorted by distance to the
cluster centroid; deletions are tombstones. Neither retrains a model until the
cluster is rebuilt. Callers must hold exclusive access while these run.
"""

from dataclasses import dataclass

import numpy as np

from .index import LimsIndex, build_cluster
from .query import _locate_pages, QueryStats
from .storage import AccessCounter, decode_payloads, encode_records

INSERTED = "inserted"
DUPLICATE = "duplicate"
DELETED = "deleted"
ABSENT = "absent"


@dataclass
class RebuildPolicy:
    max_buffer_fraction: float = 0.1


def _find(index: LimsIndex, p):
    """Locate a stored record equal to ``p``: ``(cluster, kind, record id)`` or ``None``."""
    stats = QueryStats()
    counter = AccessCounter()
    pivot_dists = index.pivot_distances(p)
    for kind, i, k in _locate_pages(index, p, 0.0, pivot_dists, None, stats):
        c = index.clusters[i]
        store = c.store if kind == "base" else c.buffer_store
        recs = store.read_page(k, counter, (kind, i, k))
        pays = decode_payloads(index.tag, recs)
        for rec, pay in zip(recs, pays):
            rid = int(rec["id"])
            if rid in c.tombstones:
                continue
            if index.metric.equal(pay, p):
                return i, kind, rid
    return None


def _buffer_records(index, c):
    if c.buffer_store is None or c.buffer_store.n_pages == 0:
        return np.zeros(0, dtype=c.store.dtype)
    return c.buffer_store.read_all()


def insert(index: LimsIndex, p, record_id=None):
    """Add ``p`` unless an equal object is already stored.

    Returns ``("inserted", id)`` or ``("duplicate", existing id)``.
    """
    if index.metric.is_vector:
        p = np.asarray(p, dtype=np.float64)
    found = _find(index, p)
    if found is not None:
        return DUPLICATE, found[2]
    cd = index.metric.many(p, [c.pivots[0] for c in index.clusters] if not index.metric.is_vector
                           else np.stack([c.pivots[0] for c in index.clusters]))
    i = int(np.argmin(cd))
    c = index.clusters[i]
    rid = index.next_id if record_id is None else int(record_id)
    index.next_id = max(index.next_id, rid + 1)
    recs = _buffer_records(index, c)
    new = encode_records(index.tag, index.d, [rid], [p])
    pos = int(np.searchsorted(c.buffer_dist, cd[i], side="right"))
    c.buffer_dist = np.insert(c.buffer_dist, pos, cd[i])
    c.buffer_store.write_region(np.concatenate([recs[:pos], new, recs[pos:]]))
    index.n += 1
    return INSERTED, rid


def delete(index: LimsIndex, p):
    """Remove the stored object equal to ``p``. Returns ``"deleted"`` or ``"absent"``."""
    if index.metric.is_vector:
        p = np.asarray(p, dtype=np.float64)
    found = _find(index, p)
    if found is None:
        return ABSENT
    i, kind, rid = found
    c = index.clusters[i]
    if kind == "buf":
        recs = _buffer_records(index, c)
        keep = recs["id"] != rid
        c.buffer_dist = c.buffer_dist[keep]
        c.buffer_store.write_region(recs[keep])
    else:
        c.tombstones.add(rid)
        _shrink_bounds(index, c, p)
    index.n -= 1
    return DELETED


def _shrink_bounds(index, c, p):
    """Drop one occurrence of ``p``'s pivot distances and refresh min/max."""
    if c.deleted_slots is None:
        c.deleted_slots = [set() for _ in range(c.m)]
    for j in range(c.m):
        arr = c.dists[j]
        x = index.metric.pair(c.pivots[j], p)
        tol = 1e-9 * max(1.0, abs(x))
        lo = int(np.searchsorted(arr, x - tol, side="left"))
        hi = int(np.searchsorted(arr, x + tol, side="right"))
        dead = c.deleted_slots[j]
        best = None
        for s in range(lo, hi):
            if s not in dead and (best is None or abs(arr[s] - x) < abs(arr[best] - x)):
                best = s
        if best is not None:
            dead.add(best)
        alive = np.ones(len(arr), dtype=bool)
        alive[list(dead)] = False
        idx = np.flatnonzero(alive)
        if len(idx):
            c.dist_min[j] = arr[idx[0]]
            c.dist_max[j] = arr[idx[-1]]


def rebuild_cluster(index: LimsIndex, i: int):
    """Merge cluster ``i``'s buffer and live records, retrain, rewrite its pages.

    Pivots are kept. Other clusters are untouched.
    """
    c = index.clusters[i]
    base = c.store.read_all()
    if c.tombstones:
        base = base[np.array([int(x) not in c.tombstones for x in base["id"]], dtype=bool)]
    recs = np.concatenate([base, _buffer_records(index, c)])
    order = np.argsort(recs["id"], kind="stable")
    recs = recs[order]
    pays = decode_payloads(index.tag, recs)
    if index.metric.is_vector:
        pays = np.array(pays).reshape(len(recs), index.d)
    new = build_cluster(index.metric, index.d, recs["id"], pays, c.pivot_ids, c.pivots, index.config)
    index.clusters[i] = new
    index._refresh_pivots()
    return new


def should_rebuild(index: LimsIndex, i: int, policy: RebuildPolicy | None = None) -> bool:
    """True when cluster ``i``'s buffer exceeds the policy's fraction of its size."""
    policy = policy or RebuildPolicy()
    c = index.clusters[i]
    return len(c.buffer_dist) > policy.max_buffer_fraction * c.live_base
