"""Command-line interface: ``lims gen|build|query|bench|stats``."""

import argparse
import json
import sys
import time

import numpy as np

from .bench import parse_spec, run_plan, write_csv
from .datasets import MetricDataset, gen_gaussmix, gen_signature, gen_skewed
from .index import IndexConfig, LimsIndex, build
from .query import default_delta_r, knn_query, point_query, range_query


def _gen(args):
    if args.kind == "gaussmix":
        ds = gen_gaussmix(args.n, args.d, args.seed)
    elif args.kind == "skewed":
        ds = gen_skewed(args.n, args.d, args.seed)
    else:
        ds = gen_signature(args.seed, n=args.n)
    ds.save(args.out)
    print(f"wrote {len(ds)} records ({ds.tag.name}, d={ds.d}) to {args.out}")


def _build(args):
    ds = MetricDataset.load(args.data)
    cfg = IndexConfig(K=args.K, m=args.m, N=args.N, deg_rp=args.deg_rp, deg_addr=args.deg_addr,
                      seed=args.seed)
    t0 = time.perf_counter()
    index = build(ds, cfg)
    elapsed = time.perf_counter() - t0
    index.save(args.out)
    print(f"built index over {len(ds)} records in {elapsed:.3f}s -> {args.out}")


def _read_queries(path, index):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if index.metric.is_vector:
                out.append(np.array([float(x) for x in line.replace(",", " ").split()]))
            else:
                out.append(line)
    return out


def _stats(stats):
    return {k: int(v) for k, v in vars(stats).items()}


def _query(args):
    index = LimsIndex.load(args.index, in_memory=False)
    queries = _read_queries(args.q_file, index)
    delta_r = args.delta_r
    for q in queries:
        qout = q.tolist() if isinstance(q, np.ndarray) else q
        if args.mode == "point":
            hit = point_query(index, q, locator=args.locator)
            rec = {"query": qout, "found": hit is not None, "id": None if hit is None else hit[0]}
        elif args.mode == "range":
            if args.r is None:
                raise SystemExit("--r is required for range queries")
            res = range_query(index, q, args.r, locator=args.locator)
            order = np.argsort(res.distances, kind="stable")
            rec = {"query": qout, "ids": res.ids[order].tolist(), "distances": res.distances[order].tolist(),
                   "stats": _stats(res.stats)}
        else:
            if args.k is None:
                raise SystemExit("--k is required for knn queries")
            if delta_r is None:
                delta_r = default_delta_r(index.logical_dataset(), 0)
            res = knn_query(index, q, args.k, delta_r, locator=args.locator)
            rec = {"query": qout, "ids": res.ids.tolist(), "distances": res.distances.tolist(),
                   "delta_r": delta_r, "stats": _stats(res.stats)}
        print(json.dumps(rec))


def _bench(args):
    with open(args.spec) as fh:
        plan = parse_spec(fh.read())
    rows = run_plan(plan)
    write_csv(rows, args.csv)
    print(f"wrote {len(rows)} rows to {args.csv}")


def _print_stats(args):
    index = LimsIndex.load(args.index)
    with open(args.index, "rb") as fh:
        size = len(fh.read())
    cfg = index.config
    print(f"metric={index.tag.name} d={index.d} n={index.n}")
    print(f"K={index.K} m={cfg.m} N={cfg.N} omega={index.omega}")
    print("cluster_sizes=" + ",".join(str(c.live_base + len(c.buffer_dist)) for c in index.clusters))
    print(f"index_bytes={size}")


def make_parser():
    p = argparse.ArgumentParser(prog="lims", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--kind", choices=["gaussmix", "skewed", "signature"], required=True)
    g.add_argument("--n", type=int, default=10000)
    g.add_argument("--d", type=int, default=8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_gen)

    b = sub.add_parser("build", help="build an index file from a dataset file")
    b.add_argument("--data", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--K", type=int, default=100)
    b.add_argument("--m", type=int, default=3)
    b.add_argument("--N", type=int, default=20)
    b.add_argument("--deg-rp", type=int, default=20)
    b.add_argument("--deg-addr", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_build)

    q = sub.add_parser("query", help="run queries from a file; prints one JSON line per query")
    q.add_argument("--index", required=True)
    q.add_argument("--mode", choices=["point", "range", "knn"], required=True)
    q.add_argument("--q-file", required=True)
    q.add_argument("--r", type=float)
    q.add_argument("--k", type=int)
    q.add_argument("--delta-r", type=float)
    q.add_argument("--locator", choices=["lims", "nlims"], default="lims")
    q.set_defaults(func=_query)

    be = sub.add_parser("bench", help="run a benchmark spec and write CSV")
    be.add_argument("--spec", required=True)
    be.add_argument("--csv", required=True)
    be.set_defaults(func=_bench)

    s = sub.add_parser("stats", help="print index parameters and sizes")
    s.add_argument("--index", required=True)
    s.set_defaults(func=_print_stats)
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
