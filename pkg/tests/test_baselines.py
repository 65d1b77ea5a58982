import numpy as np
import pytest

from ctvm.baselines import bct_sample_count, run_bct_fixed, run_degree, run_random
from ctvm.bmc import iga
from ctvm.bounds import APPROX, BoundParams, alpha, beta, lopt
from ctvm.estimator import estimate_benefit_plain
from ctvm.graph import compute_constants, from_edges
from ctvm.oracle import ExactOracle
from ctvm.sampling import SamplePool

import instances


def test_bct_matches_iga_on_same_pool():
    g = instances.dense()
    c = compute_constants(g)
    res = run_bct_fixed(g, c, 2.0, 0.1, 0.1, sample_count=3_000, seed=4)
    pool = SamplePool(g, c, 4, importance=False).extend(3_000)
    assert res.seeds == iga(pool, g, c, 2.0)
    assert res.samples == 3_000
    assert res.seeds.est_benefit == pytest.approx(estimate_benefit_plain(pool, res.seeds.nodes))


def test_bct_default_count():
    g = instances.hub()
    c = compute_constants(g)
    params = BoundParams.for_instance(g, 2.0, 0.1, 0.05)
    s = alpha(0.05) + beta(0.05, params)
    expected = int(np.ceil(2 * c.Gamma * s * s / (0.01 * lopt(g, 2.0))))
    assert bct_sample_count(g, c, 2.0, 0.1, 0.05) == expected
    assert run_bct_fixed(g, c, 2.0, 0.1, 0.05).samples == expected


def test_bct_rejects_zero_samples():
    g = instances.chain()
    with pytest.raises(ValueError):
        run_bct_fixed(g, compute_constants(g), 1.0, 0.1, 0.1, sample_count=0)


def test_bct_quality_with_large_pool():
    g = instances.cycle()
    c = compute_constants(g)
    oracle = ExactOracle(g)
    _, opt = oracle.opt(2.0)
    good = 0
    for seed in range(20):
        res = run_bct_fixed(g, c, 2.0, 0.1, 0.1, sample_count=20_000, seed=seed)
        good += oracle.benefit(res.seeds.nodes) >= (APPROX - 0.1) * opt
    assert good >= 18


@pytest.mark.parametrize("name", sorted(instances.ALL))
def test_all_nodes_when_budget_covers_everything(name):
    g = instances.ALL[name]()
    full = float(g.cost.sum())
    assert sorted(run_random(g, full, seed=3).nodes) == list(range(g.n))
    assert sorted(run_degree(g, full).nodes) == list(range(g.n))


def test_degree_takes_hub_first_and_skips():
    g = from_edges([(0, 1), (0, 2), (0, 3), (1, 2)], cost=[1, 3, 1, 1])
    assert run_degree(g, 2.0).nodes == [0, 2]
    assert run_degree(g, 0.5).nodes == []


def test_random_deterministic_and_feasible():
    g = instances.dense()
    a = run_random(g, 3.0, seed=9)
    assert a == run_random(g, 3.0, seed=9)
    assert a.est_benefit is None
    for seed in range(20):
        s = run_random(g, 3.0, seed=seed)
        assert g.cost[s.nodes].sum() <= 3.0
        assert s.total_cost == pytest.approx(g.cost[s.nodes].sum())
