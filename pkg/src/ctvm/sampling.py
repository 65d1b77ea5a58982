"""Benefit samples and importance benefit samples, pooled with a coverage index.

Sample ``i`` of a pool is a pure function of ``(graph, master_seed, i)``.
Generation may be split over worker threads; results are stitched back in
index order, so the pool never depends on the worker count.

Pool dump format (``SamplePool.dump``): one sample per line,
``<source>\\t<space-separated sorted node ids>``, internal ids.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _kernels
from .graph import Graph, GraphConstants

_SEED_MASK = (1 << 63) - 1
_CHUNK = 4096


class SamplingError(ValueError):
    """Raised when a sampling distribution has no mass."""


@dataclasses.dataclass(frozen=True)
class BenefitSample:
    source: int
    nodes: frozenset
    importance: bool


class AliasTable:
    """Vose alias table over ``candidates`` with the given nonnegative weights."""

    def __init__(self, weights: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        self.candidates = np.flatnonzero(weights > 0).astype(np.int32)
        if len(self.candidates) == 0:
            raise SamplingError("alias table needs positive total weight")
        w = weights[self.candidates]
        k = len(w)
        scaled = w / w.sum() * k
        prob = np.ones(k)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            (small if scaled[g] < 1.0 else large).append(g)
        self.prob = prob
        self.alias = alias

    def distribution(self) -> np.ndarray:
        """Implied probability of each candidate slot, for testing."""
        k = len(self.prob)
        out = self.prob / k
        np.add.at(out, self.alias, (1.0 - self.prob) / k)
        return out


def _seed(master_seed: int) -> np.uint64:
    return np.uint64(int(master_seed) & _SEED_MASK)


class SamplePool:
    """Append-only collection of benefit samples drawn with one master seed.

    Samples are held in CSR form: ``nodes[offsets[j]:offsets[j+1]]`` are the
    members of sample ``j`` with its source first. ``coverage_index()`` gives
    the inverse map, node to the ids of samples containing it.
    """

    def __init__(self, g: Graph, consts: GraphConstants, master_seed: int, importance: bool = True):
        self.graph = g
        self.consts = consts
        self.master_seed = int(master_seed)
        self.importance = importance
        if importance:
            if not consts.Phi > 0:
                raise SamplingError("Phi = 0: no node has both benefit and in-edges")
            self._alias = AliasTable(consts.gamma * g.benefit)
        else:
            if not consts.Gamma > 0:
                raise SamplingError("Gamma = 0: no node carries benefit")
            self._alias = AliasTable(g.benefit)
        self.sources = np.empty(0, dtype=np.int32)
        self.offsets = np.zeros(1, dtype=np.int64)
        self.nodes = np.empty(0, dtype=np.int32)
        self._index = None

    def __len__(self) -> int:
        return len(self.sources)

    def _batch(self, start: int, stop: int):
        g, a = self.graph, self._alias
        if self.importance:
            return _kernels.importance_batch(
                _seed(self.master_seed), start, stop, g.in_ptr, g.in_src, g.in_prob,
                self.consts.gamma, a.prob, a.alias, a.candidates,
            )
        return _kernels.benefit_batch(
            _seed(self.master_seed), start, stop, g.in_ptr, g.in_src, g.in_prob,
            a.prob, a.alias, a.candidates,
        )

    def extend(self, target_count: int, threads: int = 1) -> "SamplePool":
        """Grow the pool to exactly ``target_count`` samples."""
        start = len(self)
        if target_count < start:
            raise ValueError(f"pool already holds {start} samples, cannot shrink to {target_count}")
        if target_count == start:
            return self
        bounds = list(range(start, target_count, _CHUNK)) + [target_count]
        ranges = list(zip(bounds[:-1], bounds[1:]))
        if threads > 1 and len(ranges) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(lambda r: self._batch(*r), ranges))
        else:
            parts = [self._batch(lo, hi) for lo, hi in ranges]
        lengths = np.concatenate([p[1] for p in parts])
        self.sources = np.concatenate([self.sources] + [p[0] for p in parts])
        self.nodes = np.concatenate([self.nodes] + [p[2] for p in parts])
        self.offsets = np.concatenate([self.offsets, self.offsets[-1] + np.cumsum(lengths)])
        self._index = None
        return self

    def sample(self, j: int) -> BenefitSample:
        members = self.nodes[self.offsets[j]:self.offsets[j + 1]]
        return BenefitSample(int(self.sources[j]), frozenset(members.tolist()), self.importance)

    def __iter__(self):
        return (self.sample(j) for j in range(len(self)))

    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    def sample_ids(self) -> np.ndarray:
        """Sample id of every entry of ``nodes``."""
        return np.repeat(np.arange(len(self), dtype=np.int64), self.sizes())

    def coverage_index(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(ptr, ids)``: samples containing node ``v`` are ``ids[ptr[v]:ptr[v+1]]``."""
        if self._index is None:
            n = self.graph.n
            order = np.argsort(self.nodes, kind="stable")
            ptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(np.bincount(self.nodes, minlength=n), out=ptr[1:])
            self._index = (ptr, self.sample_ids()[order])
        return self._index

    def covered(self, seeds) -> np.ndarray:
        """Boolean mask over samples: does the sample intersect ``seeds``."""
        mask = np.zeros(len(self), dtype=bool)
        ptr, ids = self.coverage_index()
        for v in seeds:
            mask[ids[ptr[v]:ptr[v + 1]]] = True
        return mask

    def dump(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for j in range(len(self)):
                members = np.sort(self.nodes[self.offsets[j]:self.offsets[j + 1]])
                fh.write(f"{self.sources[j]}\t{' '.join(map(str, members.tolist()))}\n")


def gen_benefit_sample(g: Graph, consts: GraphConstants, sample_index: int, master_seed: int = 0) -> BenefitSample:
    pool = SamplePool(g, consts, master_seed, importance=False)
    s, lengths, nodes = pool._batch(sample_index, sample_index + 1)
    return BenefitSample(int(s[0]), frozenset(nodes.tolist()), False)


def gen_importance_sample(g: Graph, consts: GraphConstants, sample_index: int, master_seed: int = 0) -> BenefitSample:
    pool = SamplePool(g, consts, master_seed, importance=True)
    s, lengths, nodes = pool._batch(sample_index, sample_index + 1)
    return BenefitSample(int(s[0]), frozenset(nodes.tolist()), True)


def extend_pool(pool: SamplePool, target_count: int, threads: int = 1) -> SamplePool:
    return pool.extend(target_count, threads=threads)
