import csv
import json

import numpy as np
import pytest

from ctvm import graph as gm
from ctvm.cli import main, parse_budgets, UsageError
from ctvm.oracle import exact_benefit, exact_opt

import instances


@pytest.fixture
def edge_file(tmp_path):
    rng = np.random.default_rng(0)
    pairs = set()
    while len(pairs) < 300:
        u, v = rng.integers(0, 80, size=2)
        # no reverse pairs, so the file is also a valid undirected edge list
        if u != v and (int(v) * 10, int(u) * 10) not in pairs:
            pairs.add((int(u) * 10, int(v) * 10))
    path = tmp_path / "edges.txt"
    path.write_text("# toy graph\n" + "".join(f"{u} {v}\n" for u, v in sorted(pairs)))
    return path


@pytest.fixture
def prepared(tmp_path, edge_file):
    out = tmp_path / "prep"
    assert main(["prepare", "--input", str(edge_file), "--seed", "1", "--out", str(out)]) == 0
    return out


@pytest.fixture
def tiny(tmp_path):
    out = tmp_path / "tiny"
    gm.save_prepared(instances.dense(), out)
    return out


def read_reports(path):
    return json.loads(path.read_text())["reports"]


def test_parse_budgets():
    assert parse_budgets("250") == [250.0]
    assert parse_budgets("100:1000:100") == [100.0 * i for i in range(1, 11)]
    assert parse_budgets("0.5:1.5:0.5") == [0.5, 1.0, 1.5]
    for bad in ("x", "1:2", "5:1:1", "1:5:0", "0", "-3"):
        with pytest.raises(UsageError):
            parse_budgets(bad)


def test_prepare_deterministic(tmp_path, edge_file):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["prepare", "--input", str(edge_file), "--benefits", "target:0.2", "--seed", "1", "--out", str(out)]
        assert main(args) == 0
        outs.append(out)
    for f in ("edges.tsv", "nodes.tsv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    g = gm.load_prepared(outs[0])
    assert set(g.prob.tolist()) <= set(gm.TRIVALENCY_VALUES)
    assert g.benefit.sum() == int(0.2 * g.n)
    assert g.cost.sum() == pytest.approx(g.n)


def test_prepare_unit_costs_and_uniform(tmp_path, edge_file):
    out = tmp_path / "u"
    assert main(["prepare", "--input", str(edge_file), "--costs", "unit", "--benefits", "uniform",
                 "--undirected", "--out", str(out)]) == 0
    g = gm.load_prepared(out)
    assert np.all(g.cost == 1) and np.all(g.benefit == 1)
    assert not g.directed and g.m == 600


def test_prepare_from_files(tmp_path):
    edges = tmp_path / "e.txt"
    edges.write_text("5 6 0.25\n6 7 0.5\n")
    nodes = tmp_path / "n.txt"
    nodes.write_text("id cost benefit\n5 1.5 0\n6 2 1\n7 1 3\n")
    out = tmp_path / "p"
    assert main(["prepare", "--input", str(edges), "--weights", "file", "--costs", "file",
                 "--benefits", "file", "--node-file", str(nodes), "--out", str(out)]) == 0
    g = gm.load_prepared(out)
    assert g.prob.tolist() == [0.25, 0.5]
    assert g.cost.tolist() == [1.5, 2, 1] and g.benefit.tolist() == [0, 1, 3]


@pytest.mark.parametrize(
    "extra",
    [["--costs", "file"], ["--node-file", "x.txt"], ["--benefits", "nonsense"], ["--weights", "file"],
     ["--directed", "--undirected"], ["--costs", "bogus"]],
)
def test_prepare_usage_errors(tmp_path, edge_file, extra):
    assert main(["prepare", "--input", str(edge_file), "--out", str(tmp_path / "o"), *extra]) == 1


def test_prepare_data_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1\n")
    assert main(["prepare", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["prepare", "--input", str(tmp_path / "missing.txt"), "--out", str(tmp_path / "o")]) == 2


def test_run_sweep_rows(tmp_path, prepared):
    out, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["run", "--graph", str(prepared), "--algo", "degree", "--budget", "10:100:10",
                 "--out", str(out), "--csv", str(csv_path)]) == 0
    reports = read_reports(out)
    assert [r["budget"] for r in reports] == [10.0 * i for i in range(1, 11)]
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 10


@pytest.mark.parametrize("algo", ["ivm", "bct", "random", "degree"])
def test_run_report_fields_and_csv_agreement(tmp_path, prepared, algo):
    out, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
    args = ["run", "--graph", str(prepared), "--algo", algo, "--budget", "5", "--eps", "0.3",
            "--seed", "2", "--out", str(out), "--csv", str(csv_path)]
    if algo == "bct":
        args += ["--samples", "2000"]
    assert main(args) == 0
    (rep,) = read_reports(out)
    g = gm.load_prepared(prepared)
    assert rep["algorithm"] == algo and rep["schema"] == 1
    assert rep["delta"] == pytest.approx(1 / g.n)
    assert rep["graph_id"].startswith("prep@")
    ids = g.internal_ids(rep["seed_set"])
    assert g.cost[ids].sum() <= 5 + 1e-9
    assert rep["peak_rss_bytes"] > 0 and rep["peak_rss_best_effort"]
    if algo == "ivm":
        assert rep["trace"] and rep["trace"][-1]["stopped"]
        assert rep["samples_generated"] == rep["trace"][-1]["N_t"]
    if algo == "bct":
        assert rep["samples_generated"] == 2000
    (row,) = csv.DictReader(csv_path.open())
    for key, value in row.items():
        v = rep[key]
        if v is None:
            assert value == ""
        elif isinstance(v, list):
            assert value == " ".join(map(str, v))
        elif isinstance(v, float):
            assert float(value) == v
        else:
            assert value == str(v)


def test_run_explicit_and_auto_delta(tmp_path, prepared):
    out = tmp_path / "r.json"
    assert main(["run", "--graph", str(prepared), "--budget", "3", "--delta", "0.05", "--out", str(out)]) == 0
    assert read_reports(out)[0]["delta"] == 0.05
    assert main(["run", "--graph", str(prepared), "--budget", "3", "--delta", "auto", "--out", str(out)]) == 0
    assert read_reports(out)[0]["delta"] == pytest.approx(1 / gm.load_prepared(prepared).n)


def strip_timing(reports):
    for r in reports:
        for k in ("wall_time_ms", "sample_time_ms", "greedy_time_ms", "peak_rss_bytes", "threads"):
            r.pop(k)
    return reports


@pytest.mark.parametrize("algo", ["ivm", "bct"])
def test_run_deterministic_across_threads(tmp_path, prepared, algo):
    docs = []
    for threads in ("1", "1", "4"):
        out = tmp_path / f"r{len(docs)}.json"
        assert main(["run", "--graph", str(prepared), "--algo", algo, "--budget", "2:6:2", "--eps", "0.2",
                     "--seed", "5", "--threads", threads, "--samples", "5000", "--out", str(out)]) == 0
        docs.append(strip_timing(read_reports(out)))
    assert docs[0] == docs[1] == docs[2]


@pytest.mark.parametrize(
    "args",
    [["--algo", "magic"], ["--budget", "1:2"], ["--eps", "1.5"], ["--delta", "abc"], ["--budget", "0"]],
)
def test_run_usage_errors(tmp_path, prepared, args):
    base = {"--budget": "3"}
    argv = ["run", "--graph", str(prepared), "--out", str(tmp_path / "r.json")]
    if "--budget" not in args:
        argv += ["--budget", base["--budget"]]
    assert main(argv + args) == 1


def test_run_data_errors(tmp_path, prepared):
    assert main(["run", "--graph", str(tmp_path / "none"), "--budget", "3", "--out", str(tmp_path / "r")]) == 2
    # delta = 0.7 violates the (0, 1/2) requirement
    assert main(["run", "--graph", str(prepared), "--budget", "3", "--delta", "0.7",
                 "--out", str(tmp_path / "r")]) == 2


def write_report(path, graph, seed_sets):
    reps = [{"algorithm": "manual", "graph": str(graph), "seed_set": s} for s in seed_sets]
    path.write_text(json.dumps({"schema": 1, "reports": reps}))


def test_eval_empty_and_full(tmp_path, tiny):
    g = gm.load_prepared(tiny)
    rpath = tmp_path / "rep.json"
    write_report(rpath, tiny, [[], g.ext_ids.tolist()])
    assert main(["eval", "--report", str(rpath), "--trials", "500"]) == 0
    empty, full = read_reports(rpath)
    assert empty["mc_benefit"] == 0.0
    assert full["mc_benefit"] == g.benefit.sum() and full["mc_stderr"] == 0.0


def test_eval_matches_exact(tmp_path, tiny):
    g = gm.load_prepared(tiny)
    rpath, out = tmp_path / "rep.json", tmp_path / "ev.json"
    seeds = [[0], [1, 4], [2, 5, 7]]
    write_report(rpath, tiny, seeds)
    assert main(["eval", "--report", str(rpath), "--trials", "20000", "--seed", "3", "--out", str(out)]) == 0
    for s, rep in zip(seeds, read_reports(out)):
        assert abs(rep["mc_benefit"] - exact_benefit(g, s)) <= 4 * rep["mc_stderr"]


def test_eval_after_run(tmp_path, prepared):
    rpath = tmp_path / "r.json"
    main(["run", "--graph", str(prepared), "--algo", "degree", "--budget", "4", "--out", str(rpath)])
    assert main(["eval", "--report", str(rpath), "--trials", "200", "--csv", str(tmp_path / "e.csv")]) == 0
    rep = read_reports(rpath)[0]
    assert rep["mc_benefit"] >= 0 and rep["mc_trials"] == 200


def test_eval_errors(tmp_path, tiny):
    rpath = tmp_path / "rep.json"
    rpath.write_text(json.dumps({"schema": 1, "reports": [{"graph": str(tiny)}]}))
    assert main(["eval", "--report", str(rpath)]) == 2
    rpath.write_text(json.dumps({"schema": 1, "reports": []}))
    assert main(["eval", "--report", str(rpath)]) == 2


def test_oracle_commands(tiny, capsys):
    g = gm.load_prepared(tiny)
    assert main(["oracle", "benefit", "--graph", str(tiny), "--seeds", "1,4"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["benefit"] == pytest.approx(exact_benefit(g, [1, 4]))
    assert main(["oracle", "opt", "--graph", str(tiny), "--budget", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    best, val = exact_opt(g, 2.0)
    assert out["opt"] == pytest.approx(val) and out["seed_set"] == sorted(best)


def test_oracle_refuses_large(prepared):
    assert main(["oracle", "benefit", "--graph", str(prepared), "--seeds", "0"]) == 2


def test_no_command_is_usage_error():
    assert main([]) == 1


def test_module_entry_point_exit_codes(tmp_path):
    import subprocess
    import sys

    assert subprocess.run([sys.executable, "-m", "ctvm"], capture_output=True).returncode == 1
    proc = subprocess.run([sys.executable, "-m", "ctvm", "run", "--graph", str(tmp_path / "none"),
                           "--budget", "1", "--out", str(tmp_path / "r.json")], capture_output=True)
    assert proc.returncode == 2
    assert subprocess.run([sys.executable, "-m", "ctvm", "--help"], capture_output=True).returncode == 0
