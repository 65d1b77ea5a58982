"""Doubling-pool seed selection with a certified stopping rule.

The pool of importance samples doubles each round. Every round runs the
greedy on the current pool, then compares a lower bound on the candidate's
true benefit against an upper bound on the optimum; the run stops once their
ratio certifies ``1 - 1/sqrt(e) - eps`` or the pool reaches its worst-case
size ``N_max``.
"""

from __future__ import annotations

import dataclasses
import math
import time

from . import bounds
from .bmc import SeedSet, iga
from .estimator import seed_stats
from .graph import Graph, GraphConstants
from .sampling import SamplePool


class DegenerateInstance(ValueError):
    """Raised when no feasible seed set carries any benefit."""


@dataclasses.dataclass
class IvmConfig:
    eps: float
    budget: float
    delta: float | None = None
    master_seed: int = 0
    max_pool_override: int | None = None
    threads: int = 1

    def resolved_delta(self, n: int) -> float:
        return self.delta if self.delta is not None else 1.0 / n

    def validate(self, n: int) -> None:
        if not 0.0 < self.eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        delta = self.resolved_delta(n)
        if not 0.0 < delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {delta}")
        if not self.budget > 0:
            raise ValueError(f"budget must be positive, got {self.budget}")


@dataclasses.dataclass
class IterationTrace:
    t: int
    N_t: int
    S_t: list[int]
    B_hat: float
    f_l: float
    f_u: float
    ratio: float
    stopped: bool


@dataclasses.dataclass
class IvmResult:
    seeds: SeedSet
    trace: list[IterationTrace]
    samples: int
    N_max: int
    N_1: int
    t_max: int
    delta: float
    delta_1: float
    lopt: float
    sample_seconds: float = 0.0
    greedy_seconds: float = 0.0


def run_ivm(g: Graph, consts: GraphConstants, cfg: IvmConfig) -> IvmResult:
    cfg.validate(g.n)
    delta = cfg.resolved_delta(g.n)
    if not consts.Phi > 0:
        # every sample would be a singleton: the benefit is exactly the seeds' own benefit
        t0 = time.perf_counter()
        chosen = iga(None, g, consts, cfg.budget)
        return IvmResult(chosen, [], 0, 0, 0, 0, delta, delta, 0.0,
                         greedy_seconds=time.perf_counter() - t0)
    opt_lb = bounds.lopt(g, cfg.budget)
    if opt_lb <= 0:
        raise DegenerateInstance("no benefit-carrying node fits the budget (lOPT = 0)")

    params = bounds.BoundParams.for_instance(g, cfg.budget, cfg.eps, delta)
    n_max = bounds.sample_bound(params, consts, opt_lb)
    if cfg.max_pool_override is not None:
        n_max = min(n_max, cfg.max_pool_override)
    n_max = max(n_max, 1)
    n_1 = math.ceil(math.log(1.0 / delta) / cfg.eps ** 2)
    t_max = max(1, math.ceil(math.log2(n_max / n_1))) if n_max > n_1 else 1
    delta_1 = delta / (3 * t_max)
    threshold = bounds.APPROX - cfg.eps

    pool = SamplePool(g, consts, cfg.master_seed, importance=True)
    trace: list[IterationTrace] = []
    sample_s = greedy_s = 0.0
    t, target = 1, n_1
    while True:
        t0 = time.perf_counter()
        pool.extend(min(target, n_max), threads=cfg.threads)
        t1 = time.perf_counter()
        cand = iga(pool, g, consts, cfg.budget)
        stats = seed_stats(cand.nodes, consts, g.benefit)
        T = len(pool)
        f_l = bounds.lower_bound(T, delta_1, cand.est_benefit, stats, consts)
        f_u = bounds.upper_bound(T, delta_1, cand.est_benefit, stats, consts)
        greedy_s += time.perf_counter() - t1
        sample_s += t1 - t0
        ratio = f_l / f_u if f_u > 0 else 0.0
        done = ratio >= threshold or T >= n_max
        trace.append(IterationTrace(t, T, list(cand.nodes), cand.est_benefit, f_l, f_u, ratio, done))
        if done:
            return IvmResult(cand, trace, T, n_max, n_1, t_max, delta, delta_1, opt_lb,
                             sample_seconds=sample_s, greedy_seconds=greedy_s)
        t += 1
        target *= 2
