import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lims import kernels, rank_model

from test_metric import dp_levenshtein

BACKENDS = kernels.backends()


@pytest.fixture(params=sorted(BACKENDS))
def k(request):
    return BACKENDS[request.param]


def test_compiled_backend_selected_when_built():
    if "cython" in BACKENDS:
        assert kernels.BACKEND == "cython"


class TestSearch:
    arr = np.array([1.5, 1.5, 1.8, 1.8, 2.0])

    def test_first_geq_from_any_start(self, k):
        for start in np.linspace(0, 4.9, 25):
            for x, want in [(1.5, 0), (1.8, 2), (2.0, 4), (1.9, 4), (0.0, 0), (9.0, 5)]:
                assert k.search_first_geq(self.arr, float(start), x)[0] == want

    def test_exact_start_is_cheap(self, k):
        arr = np.arange(100.0)
        for x in range(100):
            idx, probes = k.search_first_geq(arr, float(x), float(x))
            assert idx == x and probes <= 2

    def test_adversarial_start(self, k):
        n = 1000
        arr = np.arange(float(n))
        idx, probes = k.search_first_geq(arr, 0.0, 5000.0)
        assert idx == n
        assert probes <= 2 * math.ceil(math.log2(n)) + 2

    def test_exhaustive_probe_bound(self, k):
        # every start and every target on a small array with duplicates
        arr = np.sort(np.random.default_rng(0).integers(0, 15, size=40)).astype(np.float64)
        for start in range(len(arr)):
            for x in np.arange(-1, 17, 0.5):
                idx, probes = k.search_first_geq(arr, float(start), float(x))
                want = int(np.searchsorted(arr, x, side="left"))
                assert idx == want
                err = abs(start - want)
                assert probes <= 2 * math.ceil(math.log2(err + 2)) + 4

    def test_last_occurrence(self, k):
        assert k.search_last_occurrence(self.arr, 0.0, 1.8) == 3
        assert k.search_last_occurrence(self.arr, 4.0, 1.5) == 1
        assert k.search_last_occurrence(np.array([3.0]), 0.0, 3.0) == 0
        assert k.search_last_occurrence(np.full(7, 2.5), 0.0, 2.5) == 6
        assert k.search_last_occurrence(self.arr, 2.0, 1.7) == -1

    def test_uint64_keys(self, k):
        keys = np.array([1, 1, 2, 2, 3, 3], dtype=np.uint64)
        assert k.search_first_geq(keys, 0.0, np.uint64(2))[0] == 2
        assert k.search_last_occurrence(keys, 5.0, np.uint64(2)) == 3

    @given(st.lists(st.integers(0, 30), min_size=1, max_size=60), st.integers(-2, 33), st.floats(0, 80))
    @settings(max_examples=300, deadline=None)
    def test_first_geq_property(self, vals, x, start):
        arr = np.sort(np.array(vals, dtype=np.float64))
        want = int(np.searchsorted(arr, x, side="left"))
        for mod in BACKENDS.values():
            assert mod.search_first_geq(arr, start, float(x))[0] == want


class TestBackendsAgree:
    def test_edit_distance(self, rng):
        letters = list("ABCD")
        words = ["".join(rng.choice(letters, size=rng.integers(1, 12))) for _ in range(60)]
        py = BACKENDS["python"]
        for mod in BACKENDS.values():
            np.testing.assert_array_equal(mod.edit_distance_many(words[0], words),
                                          py.edit_distance_many(words[0], words))

    def test_non_ascii_edit_distance(self, k):
        assert k.edit_distance("héllo", "hello") == 1
        assert k.edit_distance("", "abc") == 3

    def test_locate_and_binary(self, k, rng):
        arr = np.sort(rng.normal(size=5000))
        model = rank_model.train(arr, 20)
        xs = np.concatenate([rng.choice(arr, 300), rng.normal(size=300) * 3])
        want = np.searchsorted(arr, xs, side="left")
        got = k.locate_many(model.coefficients, model.key_min, model.key_max, arr, xs)
        np.testing.assert_array_equal(got, want)
        np.testing.assert_array_equal(k.binary_many(arr, xs), want)

    def test_locate_ranges(self, k):
        keys = np.array([1, 1, 2, 2, 3, 3, 7, 7, 7, 9], dtype=np.uint64)
        model = rank_model.train(keys.astype(np.float64), 1)
        lefts = np.array([2, 4, 0, 7, 10, 3], dtype=np.uint64)
        rights = np.array([2, 6, 1, 8, 12, 3], dtype=np.uint64)
        lb, ub = k.locate_ranges(model.coefficients, model.key_min, model.key_max, keys, lefts, rights)
        assert list(zip(lb.tolist(), ub.tolist())) == [(2, 3), (6, 5), (0, 1), (6, 8), (10, 9), (4, 5)]

    def test_cheb_predict_matches_numpy(self, k):
        from numpy.polynomial import chebyshev
        coeffs = np.array([10.0, 8.0, -1.0, 0.5])
        for x in np.linspace(0, 4, 17):
            t = 2 * x / 4 - 1
            want = min(max(chebyshev.chebval(t, coeffs), 0.0), 19.0)
            assert abs(k.cheb_predict(coeffs, 0.0, 4.0, 20, x) - want) < 1e-9


class TestBitParallelEditDistance:
    # alphabet mixes byte-range and wider code points; long strings cross the
    # 128-character word width of the compiled fast path
    text = st.text("abé€", max_size=12) | st.text("ab", min_size=120, max_size=140)

    @given(text, text)
    @settings(max_examples=300, deadline=None)
    def test_matches_dp_oracle(self, s, t):

        want = dp_levenshtein(s, t)
        for mod in BACKENDS.values():
            assert mod.edit_distance(s, t) == want
            assert mod.edit_distance_many(s, [t, s])[0] == want

    def test_word_boundaries(self, k):

        rng = np.random.default_rng(1)
        for m in (1, 63, 64, 65, 127, 128, 129):
            p = "".join(rng.choice(list("ACGT"), size=m))
            items = ["".join(rng.choice(list("ACGT"), size=n)) for n in (0, 1, m - 1, m, m + 3, 200)]
            got = k.edit_distance_many(p, items)
            np.testing.assert_array_equal(got, [dp_levenshtein(p, s) for s in items])
