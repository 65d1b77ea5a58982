"""Cost-ratio greedy with best-singleton fallback for budgeted maximum coverage.

The objective over a pool is ``scale * |samples hit by S| + sum_{v in S} add[v]``,
monotone and submodular, which covers both the importance estimator and the
plain benefit-sample estimator (``add = 0``).
"""

from __future__ import annotations

import dataclasses
import heapq
import math

import numpy as np

from .estimator import objective_terms
from .graph import GraphConstants
from .sampling import SamplePool

_EPS = 1e-12


@dataclasses.dataclass
class SeedSet:
    nodes: list[int]
    total_cost: float
    est_benefit: float | None


class _Coverage:
    def __init__(self, pool: SamplePool | None, n: int):
        if pool is None or len(pool) == 0:
            self.ptr = np.zeros(n + 1, dtype=np.int64)
            self.ids = np.empty(0, dtype=np.int64)
            self.covered = np.zeros(0, dtype=bool)
        else:
            self.ptr, self.ids = pool.coverage_index()
            self.covered = np.zeros(len(pool), dtype=bool)

    def count(self, v: int) -> int:
        lo, hi = self.ptr[v], self.ptr[v + 1]
        if lo == hi:
            return 0
        return int(hi - lo - np.count_nonzero(self.covered[self.ids[lo:hi]]))

    def initial_counts(self) -> np.ndarray:
        return np.diff(self.ptr)

    def add(self, v: int) -> None:
        self.covered[self.ids[self.ptr[v]:self.ptr[v + 1]]] = True


def _key(gain: float, cost: float, v: int) -> tuple:
    if cost <= 0:
        ratio = math.inf if gain > 0 else 0.0
    else:
        ratio = gain / cost
    return (-ratio, -gain, v)


def iga(
    pool: SamplePool | None,
    g,
    consts: GraphConstants,
    budget: float,
    lazy: bool = True,
) -> SeedSet:
    """Return the better of the ratio-greedy set and the best affordable singleton.

    Nodes are taken by decreasing ``gain / cost`` (zero-cost nodes first),
    ties by larger gain then smaller id. A node that does not fit the
    remaining budget is discarded for good; zero-gain nodes are never added.
    ``lazy=False`` rescans every candidate per step and exists for
    differential testing.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    scale, add = objective_terms(pool, consts, g.benefit)
    cost = g.cost
    cov = _Coverage(pool, g.n)
    base_gain = scale * cov.initial_counts() + add

    chosen: list[int] = []
    spent = 0.0
    if lazy:
        heap = [(*_key(base_gain[v], cost[v], v), 0) for v in range(g.n) if base_gain[v] > 0]
        heapq.heapify(heap)
        while heap:
            neg_ratio, neg_gain, v, stamp = heapq.heappop(heap)
            if stamp != len(chosen):
                gain = scale * cov.count(v) + add[v]
                assert gain <= -neg_gain + _EPS * max(1.0, -neg_gain), "marginal gain increased"
                if gain > 0:
                    heapq.heappush(heap, (*_key(gain, cost[v], v), len(chosen)))
                continue
            if spent + cost[v] <= budget:
                chosen.append(v)
                spent += cost[v]
                cov.add(v)
    else:
        remaining = set(v for v in range(g.n) if base_gain[v] > 0)
        while remaining:
            best = None
            for v in remaining:
                gain = scale * cov.count(v) + add[v]
                k = _key(gain, cost[v], v)
                if best is None or k < best[0]:
                    best = (k, v, gain)
            _, v, gain = best
            remaining.discard(v)
            if gain <= 0:
                continue
            if spent + cost[v] <= budget:
                chosen.append(v)
                spent += cost[v]
                cov.add(v)

    value = scale * np.count_nonzero(cov.covered) + float(add[chosen].sum())
    feasible = np.flatnonzero(cost <= budget)
    if len(feasible):
        single = int(feasible[np.lexsort((feasible, -base_gain[feasible]))[0]])
        if base_gain[single] > value:
            return SeedSet([single], float(cost[single]), float(base_gain[single]))
    return SeedSet(chosen, float(spent), float(value))
