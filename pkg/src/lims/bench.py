"""Benchmark harness: parameter sweeps with an exactness gate."""

import csv
import time
from dataclasses import astuple, dataclass, field, fields, replace

import numpy as np

from .datasets import MetricDataset, gen_gaussmix, gen_signature, gen_skewed
from .index import IndexConfig, build
from .oracle import radius_for_selectivity
from .query import default_delta_r, knn_query, range_query
from .rank_model import nlims_locate  # noqa: F401  (re-exported for callers)


class ExactnessError(AssertionError):
    """An index answer differed from the linear scan."""


@dataclass
class WorkloadSpec:
    queries: int = 200
    repetitions: int = 20
    selectivities: tuple = (0.0001,)
    ks: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.queries < 1 or self.repetitions < 1:
            raise ValueError("query count and repetitions must be positive")


@dataclass
class BenchRow:
    dataset: str
    n: int
    d: int
    metric: str
    variant: str
    params: str
    mean_query_time: float
    mean_pages_read: float
    build_time: float
    index_size_bytes: int


@dataclass
class BenchPlan:
    dataset: str = "gaussmix"
    n: int = 10000
    d: int = 8
    load: str | None = None
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    base: IndexConfig = field(default_factory=IndexConfig)
    sweeps: dict = field(default_factory=dict)
    variants: tuple = ("lims",)
    delta_r: float | None = None

    def configs(self) -> list:
        """The base config plus one-parameter-at-a-time variations."""
        out = [self.base]
        for name, values in self.sweeps.items():
            for v in values:
                cfg = replace(self.base, **{name: v})
                if cfg not in out:
                    out.append(cfg)
        return out

    def make_dataset(self) -> MetricDataset:
        if self.load:
            return MetricDataset.load(self.load)
        seed = self.workload.seed
        if self.dataset == "gaussmix":
            return gen_gaussmix(self.n, self.d, seed)
        if self.dataset == "skewed":
            return gen_skewed(self.n, self.d, seed)
        if self.dataset == "signature":
            return gen_signature(seed, n=self.n)
        raise ValueError(f"unknown dataset kind {self.dataset!r}")


def _fmt(cfg: IndexConfig, extra: str) -> str:
    return f"K={cfg.K};m={cfg.m};N={cfg.N};deg_rp={cfg.deg_rp};deg_addr={cfg.deg_addr};{extra}"


def run_bench(dataset: MetricDataset, name: str, spec: WorkloadSpec, configs, variants=("lims",),
              delta_r=None) -> list:
    """Build each configuration, run the workload, and return one row per measurement.

    Every answer is compared with a linear scan first; any mismatch raises
    :class:`ExactnessError` before numbers are reported.
    """
    rng = np.random.default_rng(spec.seed)
    qpos = rng.choice(len(dataset), size=min(spec.queries, len(dataset)), replace=False)
    queries = [dataset.payload(p) for p in qpos]
    oracle_d = [dataset.distances_to(q) for q in queries]
    if spec.ks and delta_r is None:
        delta_r = default_delta_r(dataset, spec.seed)
    rows = []
    for cfg in configs:
        t0 = time.perf_counter()
        index = build(dataset, cfg)
        build_time = time.perf_counter() - t0
        size = len(index.to_bytes())
        jobs = [("range", s) for s in spec.selectivities] + [("knn", k) for k in spec.ks]
        for variant in variants:
            for kind, param in jobs:
                pages, times = [], []
                for q, od in zip(queries, oracle_d):
                    if kind == "range":
                        r = radius_for_selectivity(od, param)

                        def run(q=q, r=r):
                            return range_query(index, q, r, locator=variant)
                    else:
                        def run(q=q):
                            return knn_query(index, q, param, delta_r, locator=variant)
                    res = run()
                    _check(kind, param, res, od, dataset, variant, cfg, r if kind == "range" else None)
                    pages.append(res.stats.pages_read)
                    t1 = time.perf_counter()
                    for _ in range(spec.repetitions):
                        run()
                    times.append((time.perf_counter() - t1) / spec.repetitions)
                extra = f"query={kind};{'sel' if kind == 'range' else 'k'}={param}"
                rows.append(BenchRow(name, len(dataset), dataset.d, dataset.tag.name, variant,
                                     _fmt(cfg, extra), float(np.mean(times)), float(np.mean(pages)),
                                     build_time, size))
    return rows


def _check(kind, param, res, od, dataset, variant, cfg, r):
    if kind == "range":
        want = set(dataset.ids[od <= r].tolist())
        got = res.id_set()
        if got != want:
            raise ExactnessError(f"{variant} {cfg}: range r={r} missing={sorted(want - got)[:5]} "
                                 f"extra={sorted(got - want)[:5]}")
    else:
        want = np.sort(od)[:param]
        if not np.array_equal(np.sort(res.distances), want):
            raise ExactnessError(f"{variant} {cfg}: kNN k={param} distance multiset differs")


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f.name for f in fields(BenchRow)])
        for row in rows:
            w.writerow(astuple(row))


def _ints(v):
    return tuple(int(x) for x in v.split(",") if x.strip())


def _floats(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def parse_spec(text: str) -> BenchPlan:
    """Parse ``key=value`` lines (``#`` starts a comment) into a :class:`BenchPlan`.

    ``K``, ``m`` and ``N`` accept comma lists; each list is swept on its own
    with the other parameters at their first listed value.
    """
    kv = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    plan = BenchPlan()
    plan.dataset = kv.get("dataset", plan.dataset)
    plan.n = int(kv.get("n", plan.n))
    plan.d = int(kv.get("d", plan.d))
    plan.load = kv.get("load") or None
    plan.workload = WorkloadSpec(
        queries=int(kv.get("queries", 200)),
        repetitions=int(kv.get("repetitions", 20)),
        selectivities=_floats(kv["selectivities"]) if "selectivities" in kv else (0.0001,),
        ks=_ints(kv.get("ks", "")),
        seed=int(kv.get("seed", 0)),
    )
    base = {}
    sweeps = {}
    for name in ("K", "m", "N", "deg_rp", "deg_addr"):
        if name in kv:
            vals = _ints(kv[name])
            base[name] = vals[0]
            if len(vals) > 1:
                sweeps[name] = vals
    base["seed"] = plan.workload.seed
    plan.base = IndexConfig(**base)
    plan.sweeps = sweeps
    if "variants" in kv:
        plan.variants = tuple(v.strip() for v in kv["variants"].split(",") if v.strip())
    if "delta_r" in kv:
        plan.delta_r = float(kv["delta_r"])
    return plan


def run_plan(plan: BenchPlan) -> list:
    ds = plan.make_dataset()
    name = plan.load or plan.dataset
    return run_bench(ds, name, plan.workload, plan.configs(), plan.variants, plan.delta_r)
