"""Comparison seed selectors: fixed-count plain sampling, random order, out-degree order."""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from . import bounds
from .bmc import SeedSet, iga
from .graph import Graph, GraphConstants
from .sampling import SamplePool


@dataclasses.dataclass
class BctResult:
    seeds: SeedSet
    samples: int
    sample_seconds: float
    greedy_seconds: float


def bct_sample_count(g: Graph, consts: GraphConstants, budget: float, eps: float, delta: float) -> int:
    """Static plain-sample count: the greedy sample bound with range 1 and OPT replaced by lOPT."""
    opt_lb = bounds.lopt(g, budget)
    params = bounds.BoundParams.for_instance(g, budget, eps, delta)
    return bounds.sample_count(eps, delta, params, 1.0, consts.Gamma, opt_lb)


def run_bct_fixed(
    g: Graph,
    consts: GraphConstants,
    budget: float,
    eps: float,
    delta: float,
    sample_count: int | None = None,
    seed: int = 0,
    threads: int = 1,
) -> BctResult:
    if sample_count is None:
        sample_count = bct_sample_count(g, consts, budget, eps, delta)
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    t0 = time.perf_counter()
    pool = SamplePool(g, consts, seed, importance=False).extend(sample_count, threads=threads)
    t1 = time.perf_counter()
    chosen = iga(pool, g, consts, budget)
    return BctResult(chosen, sample_count, t1 - t0, time.perf_counter() - t1)


def _fill(order, g: Graph, budget: float) -> SeedSet:
    chosen, spent = [], 0.0
    for v in order:
        if spent + g.cost[v] <= budget:
            chosen.append(int(v))
            spent += g.cost[v]
    return SeedSet(chosen, float(spent), None)


def run_random(g: Graph, budget: float, seed: int) -> SeedSet:
    order = np.random.default_rng(seed).permutation(g.n)
    return _fill(order.tolist(), g, budget)


def run_degree(g: Graph, budget: float) -> SeedSet:
    order = np.lexsort((np.arange(g.n), -g.out_degree()))
    return _fill(order.tolist(), g, budget)
