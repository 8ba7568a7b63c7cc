"""Rank prediction over sorted key arrays.

A :class:`RankModel` is a polynomial fitted by least squares to the pairs
``(key, rank(key))``. Its prediction only seeds an exponential search, so
lookups are exact no matter how good the fit is.
"""

import struct
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev

from . import kernels

RIDGE = 1e-9
_HEAD = struct.Struct("<IQdd")  # degree, n, key_min, key_max


def exact_rank(arr, x) -> int:
    """Number of elements of the sorted ``arr`` strictly smaller than ``x``."""
    return int(np.searchsorted(np.asarray(arr), x, side="left"))


def ranks_of(arr) -> np.ndarray:
    """Rank of every element of a sorted array (index of its first occurrence)."""
    arr = np.asarray(arr)
    return np.searchsorted(arr, arr, side="left").astype(np.float64)


@dataclass(frozen=True)
class RankModel:
    degree: int
    coefficients: np.ndarray
    key_min: float
    key_max: float
    n: int

    def predict(self, x) -> float:
        """Predicted rank of ``x``, clamped to ``[0, n-1]``."""
        return kernels.cheb_predict(self.coefficients, self.key_min, self.key_max, self.n, float(x))

    def normalize(self, x):
        span = self.key_max - self.key_min
        if span <= 0:
            return np.full_like(np.asarray(x, dtype=np.float64), -1.0)
        return np.clip(2.0 * (np.asarray(x, dtype=np.float64) - self.key_min) / span - 1.0, -1.0, 1.0)

    def to_bytes(self) -> bytes:
        return _HEAD.pack(self.degree, self.n, self.key_min, self.key_max) + \
            np.asarray(self.coefficients, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, buf, offset=0):
        degree, n, kmin, kmax = _HEAD.unpack_from(buf, offset)
        offset += _HEAD.size
        coeffs = np.frombuffer(buf, dtype="<f8", count=degree + 1, offset=offset).astype(np.float64)
        return cls(degree, coeffs, kmin, kmax, n), offset + 8 * (degree + 1)

    def __eq__(self, other):
        return (isinstance(other, RankModel) and self.degree == other.degree and self.n == other.n
                and self.key_min == other.key_min and self.key_max == other.key_max
                and np.array_equal(self.coefficients, other.coefficients))


def train(arr, degree: int) -> RankModel:
    """Least-squares fit of rank against key in a Chebyshev basis.

    Keys are mapped onto ``[-1, 1]`` through ``key_min``/``key_max``; a ridge
    term of 1e-9 keeps the problem well posed for arrays shorter than the degree.
    """
    if degree < 1:
        raise ValueError("degree must be positive")
    keys = np.asarray(arr, dtype=np.float64)
    n = len(keys)
    if n == 0:
        raise ValueError("cannot train on an empty array")
    kmin = float(keys[0])
    kmax = float(keys[-1])
    coeffs = np.zeros(degree + 1)
    if kmax <= kmin:
        return RankModel(degree, coeffs, kmin, kmax, n)
    ranks = ranks_of(keys)
    t = np.clip(2.0 * (keys - kmin) / (kmax - kmin) - 1.0, -1.0, 1.0)
    v = chebyshev.chebvander(t, degree)
    # ridge as extra rows: same minimizer as the regularized normal equations
    a = np.vstack([v, np.sqrt(RIDGE) * np.eye(degree + 1)])
    b = np.concatenate([ranks, np.zeros(degree + 1)])
    coeffs = np.linalg.lstsq(a, b, rcond=None)[0]
    return RankModel(degree, coeffs, kmin, kmax, n)


def search_first_geq(arr, start, x):
    """Exact rank of ``x`` found by exponential search from ``start``.

    Returns ``(rank, probes)``.
    """
    return kernels.search_first_geq(arr, float(start), x)


def search_last_occurrence(arr, start, x):
    """Index of the last element equal to ``x``; ``None`` when absent."""
    idx = kernels.search_last_occurrence(arr, float(start), x)
    return None if idx < 0 else int(idx)


def locate(model: RankModel, arr, x) -> int:
    """Predict then correct: the exact rank of ``x`` in ``arr``."""
    return int(kernels.locate_first_geq(model.coefficients, model.key_min, model.key_max, arr, x))


def nlims_locate(arr, x) -> int:
    """Model-free exact rank by plain binary search."""
    return int(kernels.binary_first_geq(arr, x)) if len(arr) else 0


class LearnedLocator:
    """Rank lookups through a trained model plus exponential-search correction."""

    name = "lims"

    def first_geq(self, model: RankModel, arr, x) -> int:
        if len(arr) == 0:
            return 0
        return int(kernels.locate_first_geq(model.coefficients, model.key_min, model.key_max, arr, x))

    def key_ranges(self, model: RankModel, keys, lefts, rights):
        """Inclusive slot bounds ``(lb, ub)`` for each inclusive key range."""
        return kernels.locate_ranges(model.coefficients, model.key_min, model.key_max, keys, lefts, rights)


class BinaryLocator:
    """Same contract as :class:`LearnedLocator`, answered by binary search alone."""

    name = "nlims"

    def first_geq(self, model, arr, x) -> int:
        return nlims_locate(arr, x)

    def key_ranges(self, model, keys, lefts, rights):
        lb = np.searchsorted(keys, lefts, side="left").astype(np.int64)
        ub = np.searchsorted(keys, rights, side="right").astype(np.int64) - 1
        return lb, ub


LEARNED = LearnedLocator()
BINARY = BinaryLocator()


def get_locator(name):
    if name is None or name == "lims":
        return LEARNED
    if name == "nlims":
        return BINARY
    if isinstance(name, (LearnedLocator, BinaryLocator)):
        return name
    raise ValueError(f"unknown locator {name!r}")
