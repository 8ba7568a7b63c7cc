"""Distance functions for the supported metric spaces.

Every metric has a scalar form (``pair``) and a one-to-many form (``many``).
Both go through the same arithmetic so that a distance recomputed later is
bitwise identical to the one stored at build time.
"""

from enum import IntEnum

import numpy as np

from . import kernels


class DimensionError(ValueError):
    """Vectors of different lengths were compared."""


class MetricTag(IntEnum):
    L2 = 0
    L1 = 1
    EDIT = 2

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(int(value))


def _check(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def l2_distance(a, b) -> float:
    a, b = _check(a, b)
    return float(_l2_rows(b[None, :], a)[0])


def l1_distance(a, b) -> float:
    a, b = _check(a, b)
    return float(_l1_rows(b[None, :], a)[0])


def edit_distance(s: str, t: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    return int(kernels.edit_distance(s, t))


def _l2_rows(rows, q):
    diff = rows - q
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _l1_rows(rows, q):
    return np.abs(rows - q).sum(axis=1)


class Metric:
    """A distance function bound to a payload kind.

    Vector payloads are 2-d float64 arrays (one row per record); string payloads
    are lists of ``str``.
    """

    def __init__(self, tag):
        self.tag = MetricTag.parse(tag)

    @property
    def is_vector(self) -> bool:
        return self.tag != MetricTag.EDIT

    def pair(self, a, b) -> float:
        if self.tag == MetricTag.EDIT:
            return float(kernels.edit_distance(a, b))
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
        return float(self.many(a, b[None, :])[0])

    def many(self, q, payloads) -> np.ndarray:
        """Distances from ``q`` to every payload, as float64."""
        if self.tag == MetricTag.EDIT:
            return kernels.edit_distance_many(q, list(payloads))
        rows = np.asarray(payloads, dtype=np.float64)
        if rows.ndim != 2:
            rows = rows.reshape(len(rows), -1)
        if len(rows) == 0:
            return np.empty(0, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if rows.shape[1] != q.shape[-1]:
            raise DimensionError(f"dimension mismatch: {rows.shape[1]} vs {q.shape[-1]}")
        if self.tag == MetricTag.L2:
            return _l2_rows(rows, q)
        return _l1_rows(rows, q)

    def equal(self, a, b) -> bool:
        if self.tag == MetricTag.EDIT:
            return a == b
        return bool(np.array_equal(np.asarray(a), np.asarray(b)))

    def __repr__(self):
        return f"Metric({self.tag.name})"

    def __eq__(self, other):
        return isinstance(other, Metric) and other.tag == self.tag

    def __hash__(self):
        return hash(self.tag)
