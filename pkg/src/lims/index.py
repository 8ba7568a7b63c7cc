"""Index core: ring IDs, LIMS keys, per-cluster metadata, build, persistence."""

import struct
from dataclasses import dataclass, field

import numpy as np

from . import rank_model
from .datasets import MetricDataset
from .metric import Metric, MetricTag
from .partitioner import ParameterError, fft_pivots, k_center
from .rank_model import RankModel
from .storage import (PAGE_SIZE, FileDevice, PageStore, decode_payloads, encode_records,
                      page_capacity, record_dtype)

MAGIC = b"LIMS"
VERSION = 1
_HEAD = struct.Struct("<4sHHIQIIIIIIIqq")
_SECTION = struct.Struct("<4sQ")


class EncodingError(ValueError):
    pass


@dataclass
class IndexConfig:
    K: int = 100
    m: int = 3
    N: int = 20
    deg_rp: int = 20
    deg_addr: int = 1
    page_size: int = PAGE_SIZE
    seed: int = 0

    def validate(self):
        for name in ("K", "m", "N", "deg_rp", "deg_addr"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be positive")
        if self.N ** self.m > 2 ** 64:
            raise ParameterError(f"N**m = {self.N}**{self.m} does not fit in a 64-bit key")
        return self


def ring_width(size: int, N: int) -> int:
    """Ranks per ring: ceil(size / N), at least 1."""
    return max(1, -(-size // N))


def ring_id(rank, width: int, N: int):
    """Ring of a rank; ranks past the last ring clamp to N-1."""
    return np.minimum(np.asarray(rank) // width, N - 1) if np.ndim(rank) else min(int(rank) // width, N - 1)


def encode_lims(rids, N: int) -> int:
    """Base-N positional encoding of a ring-ID tuple (first pivot most significant)."""
    key = 0
    for r in rids:
        r = int(r)
        if not 0 <= r < N:
            raise EncodingError(f"ring id {r} outside [0, {N})")
        key = key * N + r
    return key


def decode_lims(key: int, m: int, N: int) -> tuple:
    out = []
    key = int(key)
    for _ in range(m):
        key, r = divmod(key, N)
        out.append(r)
    return tuple(reversed(out))


def encode_lims_many(rids: np.ndarray, N: int) -> np.ndarray:
    """Row-wise :func:`encode_lims` for an ``(n, m)`` integer array."""
    rids = np.asarray(rids, dtype=np.uint64)
    keys = np.zeros(len(rids), dtype=np.uint64)
    for j in range(rids.shape[1]):
        keys = keys * np.uint64(N) + rids[:, j]
    return keys


@dataclass
class ClusterIndex:
    """Learned index over one cluster."""

    tag: MetricTag
    d: int
    N: int
    pivot_ids: np.ndarray
    pivots: object                  # (m, d) array or list of m strings
    dists: list                     # m sorted distance arrays
    dist_min: np.ndarray
    dist_max: np.ndarray
    widths: np.ndarray
    models: list                    # m RankModels over dists
    keys: np.ndarray                # sorted LIMS keys, page order
    ids: np.ndarray                 # record ids, page order
    addr_model: RankModel | None
    store: PageStore
    buffer_dist: np.ndarray = field(default_factory=lambda: np.zeros(0))
    buffer_store: PageStore | None = None
    tombstones: set = field(default_factory=set)
    deleted_slots: list | None = None  # per pivot: positions in dists of deleted records

    @property
    def m(self) -> int:
        return len(self.dists)

    @property
    def size(self) -> int:
        """Records in the base region, tombstoned ones included."""
        return len(self.keys)

    @property
    def live_base(self) -> int:
        return len(self.keys) - len(self.tombstones)

    @property
    def base_empty(self) -> bool:
        return self.live_base <= 0

    def ring_id(self, j: int, rank):
        return ring_id(rank, int(self.widths[j]), self.N)

    def pivot(self, j: int):
        return self.pivots[j]

    # serialization ------------------------------------------------------

    def meta_bytes(self) -> bytes:
        m = self.m
        parts = [struct.pack("<QII", self.size, m, self.N)]
        parts.append(encode_records(self.tag, self.d, self.pivot_ids, self.pivots).tobytes())
        parts.append(self.dist_min.astype("<f8").tobytes())
        parts.append(self.dist_max.astype("<f8").tobytes())
        parts.append(self.widths.astype("<u8").tobytes())
        for j in range(m):
            parts.append(self.models[j].to_bytes())
            parts.append(np.asarray(self.dists[j], dtype="<f8").tobytes())
        parts.append(self.keys.astype("<u8").tobytes())
        parts.append(self.ids.astype("<i8").tobytes())
        parts.append(struct.pack("<B", self.addr_model is not None))
        if self.addr_model is not None:
            parts.append(self.addr_model.to_bytes())
        parts.append(struct.pack("<Q", self.store.n_pages))
        return b"".join(parts)

    def buffer_bytes(self) -> bytes:
        nb = len(self.buffer_dist)
        head = struct.pack("<Q", nb) + np.asarray(self.buffer_dist, dtype="<f8").tobytes()
        pages = self.buffer_store.raw_bytes() if self.buffer_store is not None else b""
        return head + struct.pack("<Q", len(pages) // self.store.page_size) + pages

    def tomb_bytes(self) -> bytes:
        ids = np.array(sorted(self.tombstones), dtype="<i8")
        parts = [struct.pack("<Q", len(ids)), ids.tobytes()]
        slots = self.deleted_slots or [[] for _ in range(self.m)]
        for s in slots:
            arr = np.array(sorted(s), dtype="<u8")
            parts.append(struct.pack("<Q", len(arr)) + arr.tobytes())
        return b"".join(parts)


class LimsIndex:
    """A built index: clusters, their models, and their page regions."""

    def __init__(self, metric, d, config: IndexConfig, clusters, n, next_id):
        self.metric = metric if isinstance(metric, Metric) else Metric(metric)
        self.d = d
        self.config = config
        self.clusters = clusters
        self.n = n
        self.next_id = next_id
        self.omega = page_capacity(self.metric.tag, d, config.page_size)
        self._refresh_pivots()

    @property
    def tag(self):
        return self.metric.tag

    @property
    def K(self):
        return len(self.clusters)

    def _refresh_pivots(self):
        """Stack every pivot so query-to-pivot distances take one batch call."""
        if self.metric.is_vector:
            self.all_pivots = np.concatenate([np.asarray(c.pivots) for c in self.clusters]) \
                if self.clusters else np.zeros((0, self.d))
        else:
            self.all_pivots = [p for c in self.clusters for p in c.pivots]
        self.pivot_offsets = np.cumsum([0] + [c.m for c in self.clusters])

    def pivot_distances(self, q) -> list:
        """Distances from ``q`` to each cluster's pivots, as a per-cluster list."""
        dq = self.metric.many(q, self.all_pivots)
        off = self.pivot_offsets
        return [dq[off[i]:off[i + 1]] for i in range(self.K)]

    def centroid_of(self, i):
        return self.clusters[i].pivots[0]

    # queries (thin wrappers) ------------------------------------------------

    def range_query(self, q, r, **kw):
        from .query import range_query
        return range_query(self, q, r, **kw)

    def point_query(self, q, **kw):
        from .query import point_query
        return point_query(self, q, **kw)

    def knn_query(self, q, k, delta_r, **kw):
        from .query import knn_query
        return knn_query(self, q, k, delta_r, **kw)

    def all_records(self):
        """Logical dataset as ``(ids, payloads)``: base minus tombstones plus buffers."""
        ids = []
        pays = []
        for c in self.clusters:
            for store in (c.store, c.buffer_store):
                if store is None or store.n_pages == 0:
                    continue
                recs = store.read_all()
                keep = np.array([int(i) not in c.tombstones for i in recs["id"]], dtype=bool)
                recs = recs[keep]
                ids.append(recs["id"])
                pays.append(recs)
        if not ids:
            return np.zeros(0, dtype=np.int64), ([] if not self.metric.is_vector else np.zeros((0, self.d)))
        allrecs = np.concatenate(pays)
        order = np.argsort(allrecs["id"], kind="stable")
        allrecs = allrecs[order]
        payloads = decode_payloads(self.tag, allrecs)
        if self.metric.is_vector:
            payloads = np.array(payloads)
        return allrecs["id"].copy(), payloads

    def logical_dataset(self) -> MetricDataset:
        ids, pays = self.all_records()
        return MetricDataset(self.metric, pays, ids, d=self.d)

    # persistence ------------------------------------------------------

    def header_bytes(self) -> bytes:
        c = self.config
        return _HEAD.pack(MAGIC, VERSION, int(self.tag), self.d, self.n, self.K, c.m, c.N,
                          self.omega, c.deg_rp, c.deg_addr, c.page_size, c.seed, self.next_id)

    def to_bytes(self) -> bytes:
        parts = [self.header_bytes()]
        for c in self.clusters:
            meta = c.meta_bytes()
            parts.append(_SECTION.pack(b"CLUS", len(meta)) + meta)
        pages = [c.store.raw_bytes() for c in self.clusters]
        parts.append(_SECTION.pack(b"PAGE", sum(len(p) for p in pages)))
        parts.extend(pages)
        for c in self.clusters:
            buf = c.buffer_bytes()
            parts.append(_SECTION.pack(b"IBUF", len(buf)) + buf)
        for c in self.clusters:
            tomb = c.tomb_bytes()
            parts.append(_SECTION.pack(b"TOMB", len(tomb)) + tomb)
        return b"".join(parts)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def from_bytes(cls, buf, path=None):
        return _load(buf, path)

    @classmethod
    def load(cls, path, in_memory: bool = True):
        """Load an index file. With ``in_memory=False`` base pages are read from disk."""
        with open(path, "rb") as fh:
            buf = fh.read()
        return _load(buf, None if in_memory else path)


def cluster_regions(buf) -> list:
    """Per-cluster serialized bytes (metadata, pages, buffer, tombstones)."""
    layout = _layout(buf)
    out = []
    for i in range(layout["K"]):
        mo, ml = layout["meta"][i]
        po, pl = layout["pages"][i]
        bo, bl = layout["ibuf"][i]
        to, tl = layout["tomb"][i]
        out.append(buf[mo:mo + ml] + buf[po:po + pl] + buf[bo:bo + bl] + buf[to:to + tl])
    return out


def _read_section(buf, off, tag):
    got, length = _SECTION.unpack_from(buf, off)
    if got != tag:
        raise ValueError(f"expected section {tag!r}, found {got!r}")
    return off + _SECTION.size, length


def _layout(buf):
    head = _HEAD.unpack_from(buf, 0)
    if head[0] != MAGIC:
        raise ValueError("not an index file (bad magic)")
    K = head[5]
    page_size = head[11]
    off = _HEAD.size
    meta = []
    for _ in range(K):
        start, length = _read_section(buf, off, b"CLUS")
        meta.append((start, length))
        off = start + length
    pstart, plen = _read_section(buf, off, b"PAGE")
    pages = []
    cur = pstart
    for start, length in meta:
        n_pages = struct.unpack_from("<Q", buf, start + length - 8)[0]
        pages.append((cur, n_pages * page_size))
        cur += n_pages * page_size
    off = pstart + plen
    ibuf = []
    for _ in range(K):
        start, length = _read_section(buf, off, b"IBUF")
        ibuf.append((start, length))
        off = start + length
    tomb = []
    for _ in range(K):
        start, length = _read_section(buf, off, b"TOMB")
        tomb.append((start, length))
        off = start + length
    return {"head": head, "K": K, "meta": meta, "pages": pages, "ibuf": ibuf, "tomb": tomb}


def _load(buf, path):
    layout = _layout(buf)
    (_, version, tag, d, n, K, m, N, omega, deg_rp, deg_addr, page_size, seed, next_id) = layout["head"]
    if version != VERSION:
        raise ValueError(f"unsupported index version {version}")
    tag = MetricTag(tag)
    config = IndexConfig(K=K, m=m, N=N, deg_rp=deg_rp, deg_addr=deg_addr, page_size=page_size, seed=seed)
    rdt = record_dtype(tag, d)
    clusters = []
    for i in range(K):
        off, _ = layout["meta"][i]
        size, cm, cN = struct.unpack_from("<QII", buf, off)
        off += 16
        prec = np.frombuffer(buf, dtype=rdt, count=cm, offset=off)
        off += rdt.itemsize * cm
        pivots = decode_payloads(tag, prec)
        if tag != MetricTag.EDIT:
            pivots = np.array(pivots)
        dmin = np.frombuffer(buf, "<f8", cm, off).copy()
        off += 8 * cm
        dmax = np.frombuffer(buf, "<f8", cm, off).copy()
        off += 8 * cm
        widths = np.frombuffer(buf, "<u8", cm, off).astype(np.int64)
        off += 8 * cm
        models, dists = [], []
        for _ in range(cm):
            model, off = RankModel.from_bytes(buf, off)
            models.append(model)
            dists.append(np.frombuffer(buf, "<f8", size, off).copy())
            off += 8 * size
        keys = np.frombuffer(buf, "<u8", size, off).astype(np.uint64)
        off += 8 * size
        ids = np.frombuffer(buf, "<i8", size, off).astype(np.int64)
        off += 8 * size
        has_addr = struct.unpack_from("<B", buf, off)[0]
        off += 1
        addr = None
        if has_addr:
            addr, off = RankModel.from_bytes(buf, off)
        n_pages = struct.unpack_from("<Q", buf, off)[0]
        pstart, plen = layout["pages"][i]
        if path is None:
            store = PageStore(tag, d, page_size)
            store.device.blocks = [bytes(buf[pstart + k * page_size:pstart + (k + 1) * page_size])
                                   for k in range(n_pages)]
        else:
            store = PageStore(tag, d, page_size, device=FileDevice(path, pstart, n_pages, page_size))
        # insert buffer
        boff, _ = layout["ibuf"][i]
        nb = struct.unpack_from("<Q", buf, boff)[0]
        boff += 8
        bdist = np.frombuffer(buf, "<f8", nb, boff).copy()
        boff += 8 * nb
        nbp = struct.unpack_from("<Q", buf, boff)[0]
        boff += 8
        bstore = PageStore(tag, d, page_size)
        bstore.device.blocks = [bytes(buf[boff + k * page_size:boff + (k + 1) * page_size]) for k in range(nbp)]
        # tombstones
        toff, _ = layout["tomb"][i]
        nt = struct.unpack_from("<Q", buf, toff)[0]
        toff += 8
        tomb = set(int(x) for x in np.frombuffer(buf, "<i8", nt, toff))
        toff += 8 * nt
        slots = []
        for _ in range(cm):
            ns = struct.unpack_from("<Q", buf, toff)[0]
            toff += 8
            slots.append(set(int(x) for x in np.frombuffer(buf, "<u8", ns, toff)))
            toff += 8 * ns
        clusters.append(ClusterIndex(
            tag=tag, d=d, N=cN, pivot_ids=prec["id"].copy(), pivots=pivots, dists=dists,
            dist_min=dmin, dist_max=dmax, widths=widths, models=models, keys=keys, ids=ids,
            addr_model=addr, store=store, buffer_dist=bdist, buffer_store=bstore,
            tombstones=tomb, deleted_slots=slots if any(slots) else None))
    return LimsIndex(Metric(tag), d, config, clusters, n, next_id)


# build ------------------------------------------------------------------


def build_cluster(metric, d, ids, payloads, pivot_ids, pivots, config: IndexConfig) -> ClusterIndex:
    """Index one cluster given its members and pivots.

    ``payloads`` are the members' payloads in any order; records are laid out
    by ascending LIMS key, ties kept in input order.
    """
    tag = metric.tag
    N = config.N
    m = len(pivot_ids)
    n = len(ids)
    store = PageStore(tag, d, config.page_size)
    if n == 0:
        empty = np.zeros(0)
        return ClusterIndex(tag, d, N, np.asarray(pivot_ids, dtype=np.int64), pivots,
                            [empty.copy() for _ in range(m)], np.zeros(m), np.zeros(m),
                            np.ones(m, dtype=np.int64),
                            [RankModel(config.deg_rp, np.zeros(config.deg_rp + 1), 0.0, 0.0, 0)] * m,
                            np.zeros(0, dtype=np.uint64),
                            np.zeros(0, dtype=np.int64), None, store,
                            buffer_store=PageStore(tag, d, config.page_size))
    width = ring_width(n, N)
    rids = np.empty((n, m), dtype=np.int64)
    dists, models = [], []
    for j in range(m):
        dj = metric.many(pivots[j], payloads)
        sorted_d = np.sort(dj)
        ranks = np.searchsorted(sorted_d, dj, side="left")
        rids[:, j] = ring_id(ranks, width, N)
        dists.append(sorted_d)
        models.append(rank_model.train(sorted_d, config.deg_rp))
    keys = encode_lims_many(rids, N)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    ids = np.asarray(ids, dtype=np.int64)[order]
    if metric.is_vector:
        ordered = np.asarray(payloads)[order]
    else:
        ordered = [payloads[k] for k in order]
    store.write_region(encode_records(tag, d, ids, ordered))
    addr = rank_model.train(keys.astype(np.float64), config.deg_addr)
    return ClusterIndex(
        tag=tag, d=d, N=N, pivot_ids=np.asarray(pivot_ids, dtype=np.int64), pivots=pivots,
        dists=dists, dist_min=np.array([x[0] for x in dists]), dist_max=np.array([x[-1] for x in dists]),
        widths=np.full(m, width, dtype=np.int64), models=models, keys=keys, ids=ids,
        addr_model=addr, store=store, buffer_store=PageStore(tag, d, config.page_size))


def choose_pivots(dataset, members, center, m):
    """FFT pivots; clusters smaller than ``m`` reuse their pivots cyclically."""
    piv = fft_pivots(members, center, min(m, len(members)), dataset.dist_many)
    return [piv[j % len(piv)] for j in range(m)]


def build(dataset: MetricDataset, config: IndexConfig | None = None) -> LimsIndex:
    """k-center, FFT pivots, ring IDs, LIMS keys, pages and models for every cluster."""
    config = (config or IndexConfig()).validate()
    n = len(dataset)
    if n == 0:
        raise ParameterError("cannot index an empty dataset")
    if config.K > n:
        raise ParameterError(f"K={config.K} exceeds dataset size {n}")
    cl = k_center(dataset, config.K, config.seed)
    clusters = []
    for i in range(config.K):
        members = cl.members(i)
        piv = choose_pivots(dataset, members, cl.centers[i], config.m)
        pivots = dataset.payload(np.array(piv))
        clusters.append(build_cluster(dataset.metric, dataset.d, dataset.ids[members],
                                      dataset.payload(members), dataset.ids[np.array(piv)],
                                      pivots, config))
    next_id = int(dataset.ids.max()) + 1
    return LimsIndex(dataset.metric, dataset.d, config, clusters, n, next_id)


def recompute_keys(index: LimsIndex, dataset: MetricDataset) -> dict:
    """Recompute every record's key from scratch (oracle for the stored keys)."""
    pos_of = {int(i): k for k, i in enumerate(dataset.ids)}
    out = {}
    N = index.config.N
    for c in index.clusters:
        if c.size == 0:
            continue
        pos = np.array([pos_of[int(i)] for i in c.ids])
        pays = dataset.payload(pos)
        width = ring_width(c.size, N)
        rids = []
        for j in range(c.m):
            dj = index.metric.many(c.pivots[j], pays)
            rank = np.array([rank_model.exact_rank(c.dists[j], x) for x in dj])
            rids.append(np.minimum(rank // width, N - 1))
        rids = np.stack(rids, axis=1)
        for rid_row, rec_id in zip(rids, c.ids):
            out[int(rec_id)] = sum(int(r) * N ** (c.m - 1 - j) for j, r in enumerate(rid_row))
    return out


def query_boundary_ranks(cluster: ClusterIndex, j: int, r_min: float, r_max: float, locator=None):
    """Ranks and ring IDs bounding the distance band ``[r_min, r_max]`` for pivot ``j``.

    Returns ``(rank_min, rank_max, rid_min, rid_max)`` or ``None`` when no
    stored distance falls inside the band.
    """
    loc = rank_model.get_locator(locator)
    arr = cluster.dists[j]
    model = cluster.models[j]
    rank_min = loc.first_geq(model, arr, r_min)
    rank_max = loc.first_geq(model, arr, r_max)
    exact = rank_max < len(arr) and arr[rank_max] == r_max
    last = rank_max if exact else rank_max - 1
    if rank_min > last:
        return None
    rid_min = cluster.ring_id(j, rank_min)
    rid_max = cluster.ring_id(j, last)
    return rank_min, rank_max, rid_min, rid_max
