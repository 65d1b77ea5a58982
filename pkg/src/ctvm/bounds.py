"""Sample-count formulas, the lOPT bootstrap and the stopping-rule bound functions."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .estimator import SeedStats
from .graph import Graph, GraphConstants

APPROX = 1.0 - 1.0 / math.sqrt(math.e)


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _check_delta_closed(delta: float) -> None:
    # delta = 1 is allowed for the bound functions: it zeroes the penalty terms
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")


def log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def max_feasible_size(cost: np.ndarray, budget: float) -> int:
    """Largest cardinality of any set whose total cost fits ``budget``."""
    spent = np.cumsum(np.sort(cost))
    return int(np.searchsorted(spent, budget, side="right"))


@dataclasses.dataclass(frozen=True)
class BoundParams:
    eps: float
    delta: float
    n: int
    k_max: int

    @property
    def k0(self) -> int:
        return min(self.k_max, self.n // 2)

    @property
    def ln_M(self) -> float:
        return math.log(self.k_max) + log_binom(self.n, self.k0)

    @classmethod
    def for_instance(cls, g: Graph, budget: float, eps: float, delta: float) -> "BoundParams":
        k_max = max(1, max_feasible_size(g.cost, budget))
        return cls(eps=eps, delta=delta, n=g.n, k_max=k_max)


def alpha(delta: float) -> float:
    _check_delta(delta)
    return APPROX * math.sqrt(math.log(2.0 / delta))


def beta(delta: float, params: BoundParams) -> float:
    _check_delta(delta)
    return APPROX * math.sqrt(math.log(2.0 / delta) + params.ln_M)


def lopt(g: Graph, budget: float) -> float:
    """Benefit of a feasible set built by scanning nodes in descending benefit.

    Nodes that do not fit the remaining budget are skipped, so the result is
    the benefit of a feasible seed set and hence a lower bound on OPT.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    order = np.lexsort((np.arange(g.n), -g.benefit))
    spent = 0.0
    total = 0.0
    for v in order.tolist():
        if g.benefit[v] <= 0:
            break
        if spent + g.cost[v] <= budget:
            spent += g.cost[v]
            total += g.benefit[v]
    return total


def sample_count(eps: float, delta: float, params: BoundParams, rho: float, Gamma: float, opt_lb: float) -> int:
    """Samples sufficient for the greedy guarantee: 2 rho Gamma (alpha + beta)^2 / (eps^2 OPT).

    ``opt_lb`` stands in for OPT; a lower bound can only increase the count.
    """
    if not opt_lb > 0:
        raise ValueError("opt_lb must be positive")
    s = alpha(delta) + beta(delta, params)
    return math.ceil(2.0 * rho * Gamma * s * s / (eps * eps * opt_lb))


def sample_bound(params: BoundParams, consts: GraphConstants, opt_lb: float) -> int:
    """Cap on the importance pool size, using a third of the failure budget."""
    return sample_count(params.eps, params.delta / 3.0, params, consts.rho, consts.Gamma, opt_lb)


def lower_bound(T: int, delta: float, B_hat: float, stats: SeedStats, consts: GraphConstants) -> float:
    """High-probability lower bound on the true benefit of the seed set behind ``B_hat``."""
    _check_delta_closed(delta)
    c = math.log(1.0 / delta)
    rho, Gamma, p = consts.rho, consts.Gamma, stats.p
    a = rho * c / 3.0 - c * p
    first = B_hat - rho * c * Gamma / (3.0 * T)
    second = B_hat - Gamma / T * (a + math.sqrt(a * a + 2.0 * T * p * c * B_hat / Gamma))
    return min(max(min(first, second), 0.0), B_hat)


def upper_bound(T: int, delta: float, B_hat_SG: float, stats: SeedStats, consts: GraphConstants) -> float:
    """High-probability upper bound on OPT from the greedy candidate's estimate."""
    _check_delta_closed(delta)
    c = math.log(1.0 / delta)
    Gamma, p = consts.Gamma, stats.p
    scaled = B_hat_SG / APPROX
    cp = c * p
    return scaled + Gamma / T * (-cp + math.sqrt(cp * cp + 2.0 * T * cp * scaled / Gamma))


def concentration_tail(T: int, lam: float, mu: float, stats: SeedStats) -> tuple[float, float]:
    """Analytic bounds on ``P[sum Z - T mu >= lam]`` and ``P[sum Z - T mu <= -lam]``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    var = 2.0 * stats.p * mu * T
    upper = math.exp(-lam * lam / (2.0 / 3.0 * stats.rho * lam + var)) if var + stats.rho > 0 else 0.0
    lower = math.exp(-lam * lam / var) if var > 0 else 0.0
    return upper, lower
