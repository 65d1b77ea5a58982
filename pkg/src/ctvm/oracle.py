"""Ground truth on tiny graphs: exact expected benefit and exhaustive optimum.

``ExactOracle`` enumerates all ``2**m`` live-edge graphs once, computing for
each the set reachable from every node as a bitmask, and keeps the
probability mass of each distinct reachability pattern. Benefit queries then
reduce to a weighted sum over patterns.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np

from . import _kernels
from .graph import Graph
from .sampling import _seed

MAX_EDGES = 25
MAX_NODES = 62
MAX_OPT_NODES = 15
_CHUNK_BITS = 16


class OracleSizeError(ValueError):
    """Raised when an instance is too large for exhaustive enumeration."""


def _reach_patterns(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Distinct forward-reachability bitmask rows and their total probability."""
    if g.m > MAX_EDGES:
        raise OracleSizeError(f"exact enumeration needs m <= {MAX_EDGES}, got m = {g.m}")
    if g.n > MAX_NODES:
        raise OracleSizeError(f"exact enumeration needs n <= {MAX_NODES}, got n = {g.n}")
    if not g.has_probabilities:
        raise ValueError("edge probabilities have not been assigned")
    m, n = g.m, g.n
    logp, log1mp = np.log(g.prob), np.log1p(-g.prob)
    total = 1 << m
    chunk = 1 << min(m, _CHUNK_BITS)
    bits = np.arange(m, dtype=np.int64)
    patterns: dict[bytes, float] = {}
    for lo in range(0, total, chunk):
        subsets = np.arange(lo, lo + chunk, dtype=np.int64)
        live = ((subsets[:, None] >> bits) & 1).astype(bool)
        weight = np.exp(np.where(live, logp, log1mp).sum(axis=1))
        reach = np.broadcast_to(np.int64(1) << np.arange(n, dtype=np.int64), (chunk, n)).copy()
        for _ in range(n):
            before = reach.copy()
            for e in range(m):
                u, v = g.src[e], g.dst[e]
                reach[:, u] |= np.where(live[:, e], reach[:, v], 0)
            if np.array_equal(before, reach):
                break
        rows, inverse = np.unique(reach, axis=0, return_inverse=True)
        mass = np.bincount(inverse.ravel(), weights=weight, minlength=len(rows))
        for row, w in zip(rows, mass):
            key = row.tobytes()
            patterns[key] = patterns.get(key, 0.0) + w
    keys = list(patterns)
    rows = np.array([np.frombuffer(k, dtype=np.int64) for k in keys]).reshape(len(keys), n)
    return rows, np.array([patterns[k] for k in keys])


class ExactOracle:
    def __init__(self, g: Graph):
        self.graph = g
        self.rows, self.weights = _reach_patterns(g)
        self._bits = np.int64(1) << np.arange(g.n, dtype=np.int64)

    def benefit(self, seeds) -> float:
        seeds = sorted(set(int(s) for s in seeds))
        if not seeds:
            return 0.0
        union = np.bitwise_or.reduce(self.rows[:, seeds], axis=1)
        hit = (union[:, None] & self._bits) != 0
        return float(self.weights @ (hit @ self.graph.benefit))

    def benefit_table(self) -> np.ndarray:
        """Exact benefit of every subset, indexed by node bitmask (n <= MAX_OPT_NODES)."""
        n = self.graph.n
        if n > MAX_OPT_NODES:
            raise OracleSizeError(f"subset table needs n <= {MAX_OPT_NODES}, got n = {n}")
        full = 1 << n
        masks = np.arange(full, dtype=np.int64)
        mask_benefit = ((masks[:, None] >> np.arange(n)) & 1) @ self.graph.benefit
        table = np.zeros(full)
        step = max(1, (1 << 22) // full)
        for lo in range(0, len(self.rows), step):
            rows = self.rows[lo:lo + step]
            union = np.zeros((len(rows), full), dtype=np.int64)
            for s in range(1, full):
                low = (s & -s).bit_length() - 1
                union[:, s] = union[:, s & (s - 1)] | rows[:, low]
            table += self.weights[lo:lo + step] @ mask_benefit[union]
        return table

    def opt(self, budget: float) -> tuple[frozenset, float]:
        """Best feasible set; ties go to the lexicographically smallest sorted node list."""
        g = self.graph
        table = self.benefit_table()
        best_set, best_val = (), 0.0
        tol = 1e-12 * max(1.0, float(g.benefit.sum()))
        for k in range(g.n + 1):
            for combo in combinations(range(g.n), k):
                if g.cost[list(combo)].sum() > budget:
                    continue
                mask = sum(1 << v for v in combo)
                val = table[mask]
                if val > best_val + tol or (abs(val - best_val) <= tol and combo < best_set):
                    best_set, best_val = combo, val
        return frozenset(best_set), float(best_val)


def exact_benefit(g: Graph, seeds) -> float:
    return ExactOracle(g).benefit(seeds)


def exact_opt(g: Graph, budget: float) -> tuple[frozenset, float]:
    if g.n > MAX_OPT_NODES:
        raise OracleSizeError(f"exhaustive optimum needs n <= {MAX_OPT_NODES}, got n = {g.n}")
    return ExactOracle(g).opt(budget)


def monte_carlo_benefit(g: Graph, seeds, trials: int, seed: int, threads: int = 1) -> tuple[float, float]:
    """Forward IC simulation; returns (mean benefit, standard error of the mean)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    seeds_arr = np.array(sorted(set(int(s) for s in seeds)), dtype=np.int32)
    if len(seeds_arr) == 0:
        return 0.0, 0.0
    if not g.has_probabilities:
        raise ValueError("edge probabilities have not been assigned")
    step = 1 << 15
    ranges = [(lo, min(lo + step, trials)) for lo in range(0, trials, step)]

    def run(r):
        return _kernels.cascade_batch(
            _seed(seed), r[0], r[1], g.out_ptr, g.out_dst, g.out_prob, g.benefit, seeds_arr
        )

    if threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            values = np.concatenate(list(ex.map(run, ranges)))
    else:
        values = np.concatenate([run(r) for r in ranges])
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr
