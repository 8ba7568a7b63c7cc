"""Fixed-size pages, record serialization, and page-access accounting."""

import os
import struct
from collections import Counter

import numpy as np

from .metric import MetricTag

PAGE_SIZE = 4096
PAGE_HEADER = struct.Struct("<II")  # record_count, flags
ID_BYTES = 8
STRING_FIELD = 72  # 65-letter signatures padded to 8-byte alignment


class StorageError(IOError):
    pass


def record_size(tag, d: int) -> int:
    """Bytes per serialized record: 8-byte identifier plus payload."""
    tag = MetricTag.parse(tag)
    if tag == MetricTag.EDIT:
        return ID_BYTES + STRING_FIELD
    if tag in (MetricTag.L2, MetricTag.L1):
        if d < 1:
            raise ValueError("vector dimensionality must be positive")
        return ID_BYTES + 8 * d
    raise ValueError(f"unsupported metric tag {tag!r}")


def page_capacity(tag, d: int, page_size: int = PAGE_SIZE) -> int:
    """Omega: records that fit in one page after the header."""
    omega = (page_size - PAGE_HEADER.size) // record_size(tag, d)
    if omega < 1:
        raise ValueError("page too small for a single record")
    return omega


def record_dtype(tag, d: int) -> np.dtype:
    tag = MetricTag.parse(tag)
    if tag == MetricTag.EDIT:
        return np.dtype([("id", "<i8"), ("payload", f"S{STRING_FIELD}")])
    return np.dtype([("id", "<i8"), ("payload", "<f8", (d,))])


def encode_records(tag, d, ids, payloads) -> np.ndarray:
    """Pack ids and payloads into a structured little-endian record array."""
    dt = record_dtype(tag, d)
    out = np.zeros(len(ids), dtype=dt)
    out["id"] = ids
    if len(ids):
        if MetricTag.parse(tag) == MetricTag.EDIT:
            enc = [s.encode("ascii") for s in payloads]
            if any(len(b) > STRING_FIELD for b in enc):
                raise ValueError(f"string payloads are limited to {STRING_FIELD} bytes")
            out["payload"] = enc
        else:
            out["payload"] = np.asarray(payloads, dtype=np.float64).reshape(len(ids), d)
    return out


def decode_payloads(tag, recs):
    """Return payloads in the in-memory form used by :class:`Metric`."""
    if MetricTag.parse(tag) == MetricTag.EDIT:
        return [b.decode("ascii") for b in recs["payload"]]
    return recs["payload"]


class AccessCounter:
    """Per-query page read accounting."""

    def __init__(self):
        self.pages_read = 0
        self.by_page = Counter()

    def hit(self, page_id):
        self.pages_read += 1
        self.by_page[page_id] += 1

    def reset(self):
        self.pages_read = 0
        self.by_page.clear()

    @property
    def max_reads_per_page(self) -> int:
        return max(self.by_page.values(), default=0)


class MemoryDevice:
    """Block device held in memory; one ``bytes`` object per page."""

    def __init__(self, blocks=None):
        self.blocks = list(blocks or [])

    def __len__(self):
        return len(self.blocks)

    def read(self, k: int) -> bytes:
        return self.blocks[k]


class FileDevice:
    """Read-only block device over a contiguous page run inside a file."""

    def __init__(self, path, offset: int, count: int, page_size: int = PAGE_SIZE):
        self.path = os.fspath(path)
        self.offset = offset
        self.count = count
        self.page_size = page_size
        self._fd = os.open(self.path, os.O_RDONLY)

    def __len__(self):
        return self.count

    def read(self, k: int) -> bytes:
        data = os.pread(self._fd, self.page_size, self.offset + k * self.page_size)
        if len(data) != self.page_size:
            raise StorageError(f"short read for page {k} of {self.path}")
        return data

    @property
    def blocks(self):
        return [self.read(k) for k in range(self.count)]

    def __del__(self):
        try:
            os.close(self._fd)
        except (OSError, AttributeError):
            pass


class PageStore:
    """A region of fixed-size pages holding records in a fixed order."""

    def __init__(self, tag, d: int, page_size: int = PAGE_SIZE, device=None):
        self.tag = MetricTag.parse(tag)
        self.d = d
        self.page_size = page_size
        self.dtype = record_dtype(tag, d)
        self.omega = page_capacity(tag, d, page_size)
        self.device = device if device is not None else MemoryDevice()

    @property
    def n_pages(self) -> int:
        return len(self.device)

    def write_region(self, records: np.ndarray) -> range:
        """Replace the region with ``records`` packed into full pages.

        Returns the range of page ids written; all pages but the last are full.
        """
        records = np.ascontiguousarray(records, dtype=self.dtype)
        blocks = []
        for start in range(0, len(records), self.omega):
            chunk = records[start:start + self.omega]
            buf = bytearray(self.page_size)
            PAGE_HEADER.pack_into(buf, 0, len(chunk), 0)
            raw = chunk.tobytes()
            buf[PAGE_HEADER.size:PAGE_HEADER.size + len(raw)] = raw
            blocks.append(bytes(buf))
        self.device = MemoryDevice(blocks)
        return range(len(blocks))

    def read_page(self, k: int, counter: AccessCounter | None = None, page_id=None) -> np.ndarray:
        if not 0 <= k < self.n_pages:
            raise StorageError(f"page {k} out of range (0..{self.n_pages - 1})")
        data = self.device.read(k)
        if counter is not None:
            counter.hit(k if page_id is None else page_id)
        count, _flags = PAGE_HEADER.unpack_from(data, 0)
        return np.frombuffer(data, dtype=self.dtype, count=count, offset=PAGE_HEADER.size)

    def read_all(self) -> np.ndarray:
        """All records in region order, without touching any counter."""
        parts = [self.read_page(k) for k in range(self.n_pages)]
        if not parts:
            return np.zeros(0, dtype=self.dtype)
        return np.concatenate(parts)

    def raw_bytes(self) -> bytes:
        return b"".join(self.device.read(k) for k in range(self.n_pages))
