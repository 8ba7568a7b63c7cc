"""Metric datasets, synthetic generators, and the binary dataset file format."""

import string
import struct

import numpy as np

from .metric import Metric, MetricTag
from .storage import decode_payloads, encode_records, record_dtype

DATASET_MAGIC = b"LMSD"
_DS_HEAD = struct.Struct("<4sIQI")  # magic, metric tag, n, d
SIGNATURE_LENGTH = 65
ALPHABET = string.ascii_uppercase


class MetricDataset:
    """Records (identifier + payload) together with their distance function."""

    def __init__(self, metric, payloads, ids=None, d=None):
        self.metric = metric if isinstance(metric, Metric) else Metric(metric)
        if self.metric.is_vector:
            payloads = np.ascontiguousarray(payloads, dtype=np.float64)
            if payloads.ndim != 2:
                raise ValueError("vector payloads must be a 2-d array")
            self.d = payloads.shape[1]
        else:
            payloads = list(payloads)
            if any(not s for s in payloads):
                raise ValueError("string payloads must be non-empty")
            self.d = d if d is not None else max((len(s) for s in payloads), default=0)
        self.payloads = payloads
        n = len(payloads)
        self.ids = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
        if len(self.ids) != n:
            raise ValueError("ids and payloads differ in length")

    def __len__(self):
        return len(self.ids)

    @property
    def tag(self):
        return self.metric.tag

    def payload(self, pos):
        """Payload at a position, or a payload collection for an index array."""
        if np.ndim(pos) == 0:
            return self.payloads[int(pos)]
        if self.metric.is_vector:
            return self.payloads[np.asarray(pos)]
        return [self.payloads[int(i)] for i in pos]

    def distances_to(self, q) -> np.ndarray:
        return self.metric.many(q, self.payloads)

    def dist_many(self, pos, positions) -> np.ndarray:
        return self.metric.many(self.payload(pos), self.payload(positions))

    def subset(self, positions) -> "MetricDataset":
        positions = np.asarray(positions)
        return MetricDataset(self.metric, self.payload(positions), self.ids[positions], d=self.d)

    def to_bytes(self) -> bytes:
        head = _DS_HEAD.pack(DATASET_MAGIC, int(self.tag), len(self), self.d)
        return head + encode_records(self.tag, self.d, self.ids, self.payloads).tobytes()

    @classmethod
    def from_bytes(cls, buf) -> "MetricDataset":
        magic, tag, n, d = _DS_HEAD.unpack_from(buf, 0)
        if magic != DATASET_MAGIC:
            raise ValueError("not a dataset file (bad magic)")
        recs = np.frombuffer(buf, dtype=record_dtype(tag, d), count=n, offset=_DS_HEAD.size)
        payloads = decode_payloads(tag, recs)
        if MetricTag(tag) != MetricTag.EDIT:
            payloads = np.array(payloads)
        return cls(MetricTag(tag), payloads, recs["id"].copy(), d=d)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "MetricDataset":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def gaussmix_raw(n: int, d: int, seed: int, components: int = 150, sigma: float = 0.05):
    """Unnormalized Gaussian-mixture sample and its component labels."""
    rng = np.random.default_rng(seed)
    means = rng.uniform(0.0, 1.0, size=(components, d))
    labels = rng.integers(components, size=n)
    x = means[labels] + rng.normal(0.0, sigma, size=(n, d))
    return x, labels


def gen_gaussmix(n: int, d: int, seed: int) -> MetricDataset:
    """150 equal-weight Gaussians (sigma 0.05), clipped to [0, 1] then min-max normalized per dimension, L2."""
    x, _ = gaussmix_raw(n, d, seed)
    x = np.clip(x, 0.0, 1.0)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    span[span == 0] = 1.0
    return MetricDataset(MetricTag.L2, (x - lo) / span)


def gen_skewed(n: int, d: int, seed: int) -> MetricDataset:
    """Uniform points with coordinate j raised to the power j; L1."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, size=(n, d))
    return MetricDataset(MetricTag.L1, u ** np.arange(1, d + 1))


def gen_signature(seed: int, n: int | None = None, anchors: int = 25, per_anchor: int = 4000,
                  length: int = SIGNATURE_LENGTH, max_changes: int = 30) -> MetricDataset:
    """Mutated copies of random anchor strings under edit distance.

    Each object changes between 1 and ``max_changes`` positions of its anchor to
    different letters. Repeated strings are redrawn so all objects are distinct.
    ``n`` optionally downsamples the result with a seeded draw.
    """
    rng = np.random.default_rng(seed)
    letters = np.array(list(ALPHABET))
    k = len(letters)
    anchor_codes = rng.integers(k, size=(anchors, length))
    seen = set()
    out = []
    for a in range(anchors):
        base = anchor_codes[a]
        made = 0
        while made < per_anchor:
            x = int(rng.integers(1, max_changes + 1))
            pos = rng.choice(length, size=x, replace=False)
            codes = base.copy()
            # shift by 1..k-1 so every changed letter differs from the anchor
            codes[pos] = (codes[pos] + rng.integers(1, k, size=x)) % k
            s = "".join(letters[codes])
            if s in seen:
                continue
            seen.add(s)
            out.append(s)
            made += 1
    ds = MetricDataset(MetricTag.EDIT, out, d=length)
    if n is not None and n < len(ds):
        pick = np.sort(np.random.default_rng(seed + 1).choice(len(ds), size=n, replace=False))
        ds = MetricDataset(MetricTag.EDIT, [out[i] for i in pick], d=length)
    return ds


def signature_anchors(seed: int, anchors: int = 25, length: int = SIGNATURE_LENGTH) -> list:
    """The anchor strings :func:`gen_signature` mutates for the same seed."""
    rng = np.random.default_rng(seed)
    letters = np.array(list(ALPHABET))
    codes = rng.integers(len(letters), size=(anchors, length))
    return ["".join(letters[c]) for c in codes]


def example_words() -> MetricDataset:
    """The four-word edit-distance dataset used in the documentation examples."""
    return MetricDataset(MetricTag.EDIT, ["fame", "gain", "aim", "ACM"])
