"""Benefit estimates over sample pools and the per-seed-set range constants."""

from __future__ import annotations

import dataclasses
import math
from typing import Iterable

import numpy as np

from .graph import GraphConstants
from .sampling import BenefitSample, SamplePool


@dataclasses.dataclass(frozen=True)
class SeedStats:
    """Range of the normalised importance estimator for one seed set.

    Each importance sample contributes a value in ``[mu_min, mu_max]``;
    ``p`` bounds its variance relative to the mean.
    """

    mu_min: float
    mu_max: float

    @property
    def rho(self) -> float:
        return self.mu_max - self.mu_min

    @property
    def p(self) -> float:
        root_gap = (math.sqrt(self.mu_max) - math.sqrt(self.mu_min)) ** 2
        return max(0.0, min(self.rho, root_gap))


def singular_mass(seeds: Iterable[int], consts: GraphConstants, benefit: np.ndarray) -> float:
    """Benefit the seeds collect from their own singleton samples: sum (1 - gamma(v)) b(v)."""
    seeds = list(seeds)
    if not seeds:
        return 0.0
    idx = np.asarray(seeds, dtype=np.int64)
    return float(np.dot(1.0 - consts.gamma[idx], benefit[idx]))


def seed_stats(seeds: Iterable[int], consts: GraphConstants, benefit: np.ndarray) -> SeedStats:
    mu_min = singular_mass(seeds, consts, benefit) / consts.Gamma if consts.Gamma > 0 else 0.0
    return SeedStats(mu_min=mu_min, mu_max=consts.rho + mu_min)


def coverage(sample: BenefitSample, seeds) -> int:
    return int(not sample.nodes.isdisjoint(seeds))


def z_value(sample: BenefitSample, seeds, consts: GraphConstants, stats: SeedStats) -> float:
    if not sample.importance:
        raise ValueError("z_value is defined for importance samples only")
    return consts.rho * coverage(sample, seeds) + stats.mu_min


def estimate_benefit(pool: SamplePool, seeds, consts: GraphConstants | None = None) -> float:
    """Importance estimate: Phi * (covered fraction) + singular mass of the seeds."""
    if not pool.importance:
        raise ValueError("estimate_benefit needs an importance pool; use estimate_benefit_plain")
    if len(pool) == 0:
        raise ValueError("cannot estimate from an empty pool")
    consts = consts or pool.consts
    seeds = list(seeds)
    if not seeds:
        return 0.0
    frac = np.count_nonzero(pool.covered(seeds)) / len(pool)
    return consts.Phi * frac + singular_mass(seeds, consts, pool.graph.benefit)


def estimate_benefit_plain(pool: SamplePool, seeds, consts: GraphConstants | None = None) -> float:
    """Plain benefit-sample estimate: Gamma * (covered fraction)."""
    if pool.importance:
        raise ValueError("estimate_benefit_plain needs a plain benefit-sample pool")
    if len(pool) == 0:
        raise ValueError("cannot estimate from an empty pool")
    consts = consts or pool.consts
    seeds = list(seeds)
    if not seeds:
        return 0.0
    return consts.Gamma * np.count_nonzero(pool.covered(seeds)) / len(pool)


def per_sample_values(pool: SamplePool, seeds) -> np.ndarray:
    """Gamma-scaled per-sample estimator values; their mean is the pool estimate.

    Importance pools give ``Gamma * Z_j``, plain pools ``Gamma * Y_j``.
    """
    consts = pool.consts
    cov = pool.covered(list(seeds)).astype(np.float64)
    if pool.importance:
        return consts.Phi * cov + singular_mass(seeds, consts, pool.graph.benefit)
    return consts.Gamma * cov


def objective_terms(pool: SamplePool | None, consts: GraphConstants, benefit: np.ndarray) -> tuple[float, np.ndarray]:
    """Split the pool estimate into ``scale * (#covered samples) + sum(additive[v])``.

    ``pool=None`` means no samples at all: only the modular singleton term is left.
    """
    if pool is None or len(pool) == 0:
        return 0.0, (1.0 - consts.gamma) * benefit
    if pool.importance:
        return consts.Phi / len(pool), (1.0 - consts.gamma) * benefit
    return consts.Gamma / len(pool), np.zeros_like(benefit)
