import numpy as np
import pytest

from lims.datasets import (MetricDataset, example_words, gaussmix_raw, gen_gaussmix, gen_signature, gen_skewed,
                           signature_anchors)
from lims.metric import MetricTag, edit_distance
from lims.oracle import oracle_knn, oracle_range, radius_for_selectivity


class TestGaussMix:
    def test_reproducible_and_bounded(self):
        a, b = gen_gaussmix(3000, 4, 7), gen_gaussmix(3000, 4, 7)
        assert a.to_bytes() == b.to_bytes()
        assert a.tag == MetricTag.L2
        assert a.payloads.min() >= 0.0 and a.payloads.max() <= 1.0
        assert gen_gaussmix(3000, 4, 8).to_bytes() != a.to_bytes()

    def test_component_sigma(self):
        x, labels = gaussmix_raw(100_000, 2, 0)
        sds = [x[labels == c].std(axis=0, ddof=1) for c in range(150) if (labels == c).sum() > 100]
        sds = np.concatenate(sds)
        assert np.all(np.abs(sds - 0.05) <= 0.2 * 0.05)


class TestSkewed:
    def test_moments(self):
        ds = gen_skewed(100_000, 4, 0)
        assert ds.tag == MetricTag.L1
        for j in range(4):
            want = 1.0 / (j + 2)  # E[u^(j+1)]
            assert abs(ds.payloads[:, j].mean() - want) <= 0.05 * want

    def test_one_dimension_is_uniform(self):
        ds = gen_skewed(1000, 1, 3)
        u = np.random.default_rng(3).uniform(0.0, 1.0, size=(1000, 1))
        np.testing.assert_array_equal(ds.payloads, u)

    def test_reproducible(self):
        assert gen_skewed(500, 3, 1).to_bytes() == gen_skewed(500, 3, 1).to_bytes()


@pytest.fixture(scope="module")
def full():
    return gen_signature(0)


class TestSignature:
    def test_cardinality_and_form(self, full):
        assert len(full) == 100_000
        assert full.tag == MetricTag.EDIT
        assert len(set(full.payloads)) == 100_000
        assert all(len(s) == 65 for s in full.payloads[:1000])

    def test_hamming_to_anchor(self, full):
        anchors = signature_anchors(0)
        for a, anchor in enumerate(anchors):
            block = full.payloads[a * 4000:(a + 1) * 4000]
            ham = np.array([sum(c1 != c2 for c1, c2 in zip(s, anchor)) for s in block])
            assert ham.min() >= 1 and ham.max() <= 30
        for s in full.payloads[::9973]:
            anchor = anchors[full.payloads.index(s) // 4000]
            assert edit_distance(s, anchor) <= sum(c1 != c2 for c1, c2 in zip(s, anchor))

    def test_downsample(self):
        a = gen_signature(0, n=10_000)
        assert len(a) == 10_000
        assert a.to_bytes() == gen_signature(0, n=10_000).to_bytes()


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        for ds in (gen_gaussmix(500, 3, 0), gen_skewed(200, 5, 1), example_words()):
            path = tmp_path / "ds.lmsd"
            ds.save(path)
            raw = path.read_bytes()
            assert raw[:4] == b"LMSD"
            back = MetricDataset.load(path)
            assert back.to_bytes() == raw
            assert back.tag == ds.tag and len(back) == len(ds)

    def test_bad_magic(self):
        with pytest.raises(ValueError):
            MetricDataset.from_bytes(b"XXXX" + b"\0" * 20)


class TestOracle:
    def test_worked_example(self):
        ds = example_words()
        ids, _ = oracle_range(ds, "game", 2)
        assert {ds.payloads[i] for i in ids} == {"fame", "gain"}
        ids, d = oracle_knn(ds, "game", 1)
        assert [ds.payloads[i] for i in ids] == ["fame"] and d[0] == 1

    def test_infinite_radius(self):
        ds = gen_gaussmix(300, 2, 0)
        assert len(oracle_range(ds, ds.payload(0), np.inf)[0]) == 300

    def test_second_scan(self, rng):
        ds = gen_skewed(400, 3, 2)
        q = rng.random(3)
        r = 0.4
        want = [i for i in range(len(ds)) if sum(abs(a - b) for a, b in zip(ds.payloads[i], q)) <= r]
        assert oracle_range(ds, q, r)[0].tolist() == want
        ids, d = oracle_knn(ds, q, 10)
        brute = sorted((sum(abs(a - b) for a, b in zip(p, q)), i) for i, p in enumerate(ds.payloads))[:10]
        np.testing.assert_allclose(d, [b[0] for b in brute], atol=1e-12)

    def test_selectivity_radius(self):
        d = np.array([0.0, 0.5, 0.1, 0.3, 0.2])
        assert radius_for_selectivity(d, 0.0001) == 0.0
        assert radius_for_selectivity(d, 0.6) == 0.2
