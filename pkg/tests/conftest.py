import numpy as np
import pytest

from lims import IndexConfig, build, gen_gaussmix
from lims.datasets import example_words


@pytest.fixture(scope="session")
def gm10k():
    return gen_gaussmix(10_000, 8, 0)


@pytest.fixture(scope="session")
def gm10k_index(gm10k):
    return build(gm10k, IndexConfig(K=100, m=3, N=20, seed=0))


@pytest.fixture(scope="session")
def small_gm():
    return gen_gaussmix(2000, 4, 3)


@pytest.fixture(scope="session")
def small_index(small_gm):
    return build(small_gm, IndexConfig(K=20, m=3, N=10, seed=1))


@pytest.fixture
def words():
    return example_words()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
