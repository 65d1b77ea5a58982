"""Command line harness: prepare graphs, run selectors over budget sweeps, evaluate, query the oracle.

Exit codes: 0 success, 1 usage error, 2 data error.

Run reports are JSON documents ``{"schema": 1, "reports": [...]}``; with
``--csv`` the scalar fields of every report are also written one row per
report (seed sets space-separated, trace omitted).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import resource
import sys
import time
from pathlib import Path

from . import baselines, graph as gmod, oracle
from .ivm import DegenerateInstance, IvmConfig, run_ivm
from .sampling import SamplingError

REPORT_SCHEMA = 1
EXIT_USAGE = 1
EXIT_DATA = 2
ALGORITHMS = ("ivm", "bct", "random", "degree")
CSV_FIELDS = (
    "algorithm", "graph_id", "budget", "eps", "delta", "seed_set", "total_cost",
    "estimated_benefit", "mc_benefit", "mc_stderr", "samples_generated",
    "wall_time_ms", "sample_time_ms", "greedy_time_ms", "peak_rss_bytes", "rng_seed", "threads",
)

log = logging.getLogger("ctvm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_budgets(text: str) -> list[float]:
    """``"250"`` or an inclusive sweep ``"100:1000:100"``."""
    parts = text.split(":")
    try:
        vals = [float(x) for x in parts]
    except ValueError:
        raise UsageError(f"bad budget {text!r}") from None
    if len(vals) == 1:
        budgets = vals
    elif len(vals) == 3:
        lo, hi, step = vals
        if step <= 0 or hi < lo:
            raise UsageError(f"bad budget sweep {text!r}")
        count = math.floor((hi - lo) / step + 1e-9) + 1
        budgets = [lo + i * step for i in range(count)]
    else:
        raise UsageError(f"bad budget {text!r}; expected B or start:stop:step")
    if any(b <= 0 for b in budgets):
        raise UsageError("budgets must be positive")
    return budgets


def graph_id(path: Path) -> str:
    h = hashlib.sha256()
    for name in ("edges.tsv", "nodes.tsv"):
        h.update((path / name).read_bytes())
    return f"{path.name}@{h.hexdigest()[:12]}"


def _peak_rss() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024


def _load_node_file(path: str) -> dict[int, tuple[float, float]]:
    attrs = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("id"):
                continue
            toks = line.split()
            if len(toks) != 3:
                raise gmod.GraphError(f"{path}:{lineno}: expected 'id cost benefit'")
            attrs[int(toks[0])] = (float(toks[1]), float(toks[2]))
    return attrs


def cmd_prepare(args) -> int:
    needs_node_file = args.costs == "file" or args.benefits == "file"
    if needs_node_file and not args.node_file:
        raise UsageError("--costs file / --benefits file require --node-file")
    if args.node_file and not needs_node_file:
        raise UsageError("--node-file given but neither --costs nor --benefits is 'file'")
    seed = args.seed if args.seed is not None else 0

    g = gmod.load_edge_list(args.input, directed=args.directed)
    if args.weights == "trivalency":
        if g.has_probabilities and g.m:
            raise UsageError("input already carries probabilities; use --weights file")
        g = gmod.assign_weights_trivalency(g, seed)
    elif not g.has_probabilities:
        raise UsageError("--weights file needs a third column with probabilities")
    else:
        g = g.replace(meta={"weights": "file"})

    node_attrs = _load_node_file(args.node_file) if needs_node_file else {}
    if node_attrs:
        missing = [e for e in g.ext_ids.tolist() if e not in node_attrs]
        if missing:
            raise gmod.GraphError(f"{args.node_file}: no attributes for node {missing[0]}")
    ext = g.ext_ids.tolist()

    if args.costs == "degree":
        g = gmod.assign_costs_degree(g)
    elif args.costs == "unit":
        g = gmod.assign_costs_unit(g)
    else:
        g = g.replace(cost=[node_attrs[e][0] for e in ext], meta={"costs": "file"})

    if args.benefits.startswith("target:"):
        try:
            frac = float(args.benefits.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad --benefits {args.benefits!r}") from None
        g = gmod.assign_benefits_target(g, frac, seed + 1)
    elif args.benefits == "uniform":
        g = gmod.assign_benefits_uniform(g)
    elif args.benefits == "file":
        g = g.replace(benefit=[node_attrs[e][1] for e in ext], meta={"benefits": "file"})
    else:
        raise UsageError(f"unknown --benefits {args.benefits!r}")

    g = g.replace(meta={"seed": seed})
    out = gmod.save_prepared(g, args.out)
    log.info("prepared %s: n=%d m=%d", out, g.n, g.m)
    return 0


def _report_base(args, gid, budget, delta) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "algorithm": args.algo,
        "graph": str(args.graph),
        "graph_id": gid,
        "budget": budget,
        "eps": args.eps,
        "delta": delta,
        "rng_seed": args.seed,
        "threads": args.threads,
    }


def run_one(g, consts, args, gid: str, budget: float) -> dict:
    delta = args.delta if args.delta is not None else 1.0 / g.n
    rep = _report_base(args, gid, budget, delta)
    trace = None
    sample_ms = greedy_ms = 0.0
    t0 = time.perf_counter()
    if args.algo == "ivm":
        res = run_ivm(g, consts, IvmConfig(eps=args.eps, budget=budget, delta=delta,
                                           master_seed=args.seed, threads=args.threads))
        seeds, samples = res.seeds, res.samples
        sample_ms, greedy_ms = res.sample_seconds * 1e3, res.greedy_seconds * 1e3
        trace = [vars(tr) for tr in res.trace]
        for tr in trace:
            tr["S_t"] = g.ext_ids[tr["S_t"]].tolist()
        rep["ivm"] = {"N_max": res.N_max, "N_1": res.N_1, "t_max": res.t_max,
                      "delta_1": res.delta_1, "lopt": res.lopt}
    elif args.algo == "bct":
        res = baselines.run_bct_fixed(g, consts, budget, args.eps, delta,
                                      sample_count=args.samples, seed=args.seed, threads=args.threads)
        seeds, samples = res.seeds, res.samples
        sample_ms, greedy_ms = res.sample_seconds * 1e3, res.greedy_seconds * 1e3
    elif args.algo == "random":
        seeds, samples = baselines.run_random(g, budget, args.seed), 0
    else:
        seeds, samples = baselines.run_degree(g, budget), 0
    wall_ms = (time.perf_counter() - t0) * 1e3
    rep.update({
        "seed_set": g.ext_ids[seeds.nodes].tolist(),
        "total_cost": seeds.total_cost,
        "estimated_benefit": seeds.est_benefit,
        "mc_benefit": None,
        "mc_stderr": None,
        "samples_generated": samples,
        "wall_time_ms": wall_ms,
        "sample_time_ms": sample_ms,
        "greedy_time_ms": greedy_ms,
        "peak_rss_bytes": _peak_rss(),
        "peak_rss_best_effort": True,
        "trace": trace,
    })
    return rep


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_reports(reports: list[dict], out: str, csv_path: str | None) -> None:
    Path(out).write_text(json.dumps({"schema": REPORT_SCHEMA, "reports": reports}, indent=2) + "\n")
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            for rep in reports:
                w.writerow([_csv_value(rep.get(k)) for k in CSV_FIELDS])


def cmd_run(args) -> int:
    if args.eps <= 0 or args.eps >= 1:
        raise UsageError("--eps must lie in (0, 1)")
    budgets = parse_budgets(args.budget)
    path = Path(args.graph)
    g = gmod.load_prepared(path)
    consts = gmod.compute_constants(g)
    gid = graph_id(path)
    reports = [run_one(g, consts, args, gid, b) for b in budgets]
    write_reports(reports, args.out, args.csv)
    return 0


def cmd_eval(args) -> int:
    doc = json.loads(Path(args.report).read_text())
    reports = doc.get("reports")
    if not reports:
        raise gmod.GraphError(f"{args.report}: no reports found")
    cache = {}
    for rep in reports:
        if rep.get("seed_set") is None:
            raise gmod.GraphError(f"{args.report}: report without a seed set")
        gpath = args.graph or rep["graph"]
        if gpath not in cache:
            cache[gpath] = gmod.load_prepared(gpath)
        g = cache[gpath]
        seeds = g.internal_ids(rep["seed_set"])
        mean, se = oracle.monte_carlo_benefit(g, seeds, args.trials, args.seed, threads=args.threads)
        rep.update({"mc_benefit": mean, "mc_stderr": se, "mc_trials": args.trials, "mc_seed": args.seed})
    out = args.out or args.report
    write_reports(reports, out, args.csv)
    return 0


def cmd_oracle(args) -> int:
    g = gmod.load_prepared(args.graph)
    if args.query == "benefit":
        seeds = g.internal_ids(int(x) for x in args.seeds.split(",") if x.strip()) if args.seeds else []
        result = {"seed_set": sorted(g.ext_ids[seeds].tolist()), "benefit": oracle.exact_benefit(g, seeds)}
    else:
        best, val = oracle.exact_opt(g, args.budget)
        result = {"budget": args.budget, "seed_set": sorted(g.ext_ids[sorted(best)].tolist()), "opt": val}
    print(json.dumps(result))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctvm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pr = sub.add_parser("prepare", help="ingest an edge list and assign weights, costs, benefits")
    pr.add_argument("--input", required=True)
    d = pr.add_mutually_exclusive_group()
    d.add_argument("--directed", dest="directed", action="store_true", default=True)
    d.add_argument("--undirected", dest="directed", action="store_false")
    pr.add_argument("--weights", choices=("trivalency", "file"), default="trivalency")
    pr.add_argument("--costs", choices=("degree", "unit", "file"), default="degree")
    pr.add_argument("--benefits", default="target:0.2", help="target:<frac> | uniform | file")
    pr.add_argument("--node-file", help="whitespace 'id cost benefit' lines for the 'file' schemes")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_prepare)

    ru = sub.add_parser("run", help="select seeds for one budget or a budget sweep")
    ru.add_argument("--graph", required=True)
    ru.add_argument("--algo", choices=ALGORITHMS, default="ivm")
    ru.add_argument("--budget", required=True, help="B or start:stop:step (inclusive)")
    ru.add_argument("--eps", type=float, default=0.1)
    ru.add_argument("--delta", type=_delta_arg, default=None, help="failure probability or 'auto' (1/n)")
    ru.add_argument("--samples", type=int, help="override the bct sample count")
    ru.add_argument("--seed", type=int, default=0)
    ru.add_argument("--threads", type=int, default=1)
    ru.add_argument("--out", required=True)
    ru.add_argument("--csv")
    ru.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="Monte Carlo benefit of report seed sets")
    ev.add_argument("--report", required=True)
    ev.add_argument("--graph")
    ev.add_argument("--trials", type=int, default=10000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--threads", type=int, default=1)
    ev.add_argument("--out")
    ev.add_argument("--csv")
    ev.set_defaults(func=cmd_eval)

    orc = sub.add_parser("oracle", help="exact benefit or optimum on tiny graphs")
    orc_sub = orc.add_subparsers(dest="query", required=True, parser_class=_Parser)
    ob = orc_sub.add_parser("benefit")
    ob.add_argument("--graph", required=True)
    ob.add_argument("--seeds", default="", help="comma-separated external ids")
    oo = orc_sub.add_parser("opt")
    oo.add_argument("--graph", required=True)
    oo.add_argument("--budget", type=float, required=True)
    orc.set_defaults(func=cmd_oracle)
    return p


def _delta_arg(text: str):
    if text == "auto":
        return None
    return float(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # return the code instead of exiting so main() stays callable in-process
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ctvm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (gmod.GraphError, SamplingError, DegenerateInstance, oracle.OracleSizeError,
            ValueError, OSError) as exc:
        print(f"ctvm: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
