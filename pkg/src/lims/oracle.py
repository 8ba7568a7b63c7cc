"""Linear-scan answers used to check the index."""

import numpy as np


def oracle_range(dataset, q, r):
    """Ids and distances of every object within ``r`` of ``q``, in dataset order."""
    d = dataset.distances_to(q)
    hit = d <= r
    return dataset.ids[hit], d[hit]


def oracle_knn(dataset, q, k):
    """The ``k`` nearest objects by a stable full sort (ties keep dataset order)."""
    d = dataset.distances_to(q)
    order = np.argsort(d, kind="stable")[:k]
    return dataset.ids[order], d[order]


def radius_for_selectivity(distances, selectivity: float) -> float:
    """Radius that captures ``max(1, round(selectivity * n))`` objects."""
    d = np.sort(np.asarray(distances))
    target = max(1, int(round(selectivity * len(d))))
    return float(d[min(target, len(d)) - 1])
