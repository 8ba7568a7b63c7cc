"""Learned index for exact point, range and kNN search in metric spaces."""

from .datasets import MetricDataset, gen_gaussmix, gen_signature, gen_skewed
from .index import IndexConfig, LimsIndex, build
from .kernels import BACKEND
from .maintenance import RebuildPolicy, delete, insert, rebuild_cluster, should_rebuild
from .metric import Metric, MetricTag
from .query import default_delta_r, knn_query, point_query, range_query

__all__ = [
    "BACKEND", "IndexConfig", "LimsIndex", "Metric", "MetricDataset", "MetricTag", "RebuildPolicy",
    "build", "default_delta_r", "delete", "gen_gaussmix", "gen_signature", "gen_skewed", "insert",
    "knn_query", "point_query", "range_query", "rebuild_cluster", "should_rebuild",
]
