"""Graph ingestion, attribute assignment and precomputed sampling constants.

A :class:`Graph` is immutable once built. Every assignment helper returns a
new instance; the numpy arrays inside are flagged read-only so that sharing a
graph between worker threads is safe.

Prepared graphs are persisted as a directory holding three files:

``edges.tsv``
    header ``src<TAB>dst<TAB>p``; one arc per line in insertion order, node
    ids are *external* ids, ``p`` written with ``%.17g``.
``nodes.tsv``
    header ``id<TAB>cost<TAB>benefit``; one line per node in internal-id
    order, floats written with ``%.17g``.
``manifest.json``
    schema version, ``n``, ``m``, ``directed``, the input path and the RNG
    seeds used by each assignment step.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TRIVALENCY_VALUES = (0.001, 0.01, 0.1)
PREPARED_SCHEMA = 1
_FLOAT_FMT = "%.17g"


class GraphError(ValueError):
    """Raised for malformed input files or invalid graph attributes."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (ptr, order) grouping edge indices by ``keys``, stable in edge order."""
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr, order


@dataclasses.dataclass(frozen=True, eq=False)
class Graph:
    """Directed graph with edge probabilities and node cost/benefit.

    Edges are stored in insertion order as parallel ``src``/``dst``/``prob``
    arrays. ``in_ptr``/``in_src``/``in_prob`` form the in-adjacency in CSR
    layout, each node's in-list keeping the file order of its in-edges;
    ``out_ptr``/``out_dst``/``out_prob`` are the forward equivalent.
    ``prob`` is NaN until weights are assigned.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    prob: np.ndarray
    cost: np.ndarray
    benefit: np.ndarray
    ext_ids: np.ndarray
    directed: bool = True
    meta: dict = dataclasses.field(default_factory=dict)

    in_ptr: np.ndarray = dataclasses.field(init=False, repr=False)
    in_src: np.ndarray = dataclasses.field(init=False, repr=False)
    in_prob: np.ndarray = dataclasses.field(init=False, repr=False)
    out_ptr: np.ndarray = dataclasses.field(init=False, repr=False)
    out_dst: np.ndarray = dataclasses.field(init=False, repr=False)
    out_prob: np.ndarray = dataclasses.field(init=False, repr=False)

    def __post_init__(self) -> None:
        src = np.asarray(self.src, dtype=np.int32)
        dst = np.asarray(self.dst, dtype=np.int32)
        prob = np.asarray(self.prob, dtype=np.float64)
        cost = np.asarray(self.cost, dtype=np.float64)
        benefit = np.asarray(self.benefit, dtype=np.float64)
        ext_ids = np.asarray(self.ext_ids, dtype=np.int64)
        if not (len(src) == len(dst) == len(prob)):
            raise GraphError("edge arrays differ in length")
        if not (len(cost) == len(benefit) == len(ext_ids) == self.n):
            raise GraphError("node arrays must have length n")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= self.n):
            raise GraphError("edge endpoint out of range")
        if np.any(src == dst):
            raise GraphError("self-loops are not allowed")
        known = ~np.isnan(prob)
        if np.any((prob[known] <= 0.0) | (prob[known] >= 1.0)):
            raise GraphError("edge probabilities must lie in the open interval (0, 1)")
        if np.any(cost < 0) or np.any(benefit < 0):
            raise GraphError("costs and benefits must be nonnegative")

        in_ptr, in_order = _csr(dst, self.n)
        out_ptr, out_order = _csr(src, self.n)
        set_ = object.__setattr__
        for name, val in (
            ("src", src), ("dst", dst), ("prob", prob), ("cost", cost),
            ("benefit", benefit), ("ext_ids", ext_ids),
            ("in_ptr", in_ptr), ("in_src", src[in_order]), ("in_prob", prob[in_order]),
            ("out_ptr", out_ptr), ("out_dst", dst[out_order]), ("out_prob", prob[out_order]),
        ):
            set_(self, name, _frozen(val))

    @property
    def m(self) -> int:
        return len(self.src)

    @property
    def has_probabilities(self) -> bool:
        return not np.isnan(self.prob).any()

    def in_adj(self, v: int) -> list[tuple[int, float]]:
        lo, hi = self.in_ptr[v], self.in_ptr[v + 1]
        return list(zip(self.in_src[lo:hi].tolist(), self.in_prob[lo:hi].tolist()))

    def out_adj(self, u: int) -> list[tuple[int, float]]:
        lo, hi = self.out_ptr[u], self.out_ptr[u + 1]
        return list(zip(self.out_dst[lo:hi].tolist(), self.out_prob[lo:hi].tolist()))

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_ptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_ptr)

    def replace(self, **changes) -> "Graph":
        meta = dict(self.meta)
        meta.update(changes.pop("meta", {}))
        return dataclasses.replace(self, meta=meta, **changes)

    def internal_ids(self, external: Iterable[int]) -> list[int]:
        lookup = {int(e): i for i, e in enumerate(self.ext_ids.tolist())}
        try:
            return [lookup[int(e)] for e in external]
        except KeyError as exc:
            raise GraphError(f"unknown node id {exc.args[0]}") from None


def from_edges(
    edges: Sequence[tuple],
    n: int | None = None,
    cost: Sequence[float] | None = None,
    benefit: Sequence[float] | None = None,
    directed: bool = True,
) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, p)`` tuples over ids ``0..n-1``.

    Missing costs default to 1, missing benefits to 1. Intended for small
    hand-built instances; file input goes through :func:`load_edge_list`.
    """
    if n is None:
        n = 1 + max((max(e[0], e[1]) for e in edges), default=-1)
    src, dst, prob = [], [], []
    seen = set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        p = float(e[2]) if len(e) > 2 else math.nan
        arcs = [(u, v)] if directed else [(u, v), (v, u)]
        for a, b in arcs:
            if (a, b) in seen:
                raise GraphError(f"duplicate edge {a} -> {b}")
            seen.add((a, b))
            src.append(a)
            dst.append(b)
            prob.append(p)
    return Graph(
        n=n,
        src=np.array(src, dtype=np.int32),
        dst=np.array(dst, dtype=np.int32),
        prob=np.array(prob, dtype=np.float64),
        cost=np.ones(n) if cost is None else np.asarray(cost, dtype=np.float64),
        benefit=np.ones(n) if benefit is None else np.asarray(benefit, dtype=np.float64),
        ext_ids=np.arange(n, dtype=np.int64),
        directed=directed,
    )


def load_edge_list(path: str | Path, directed: bool = True) -> Graph:
    """Read a whitespace-separated ``u v [p]`` edge list.

    Node ids are remapped to ``0..n-1`` by order of first appearance; the
    original ids are kept in ``Graph.ext_ids``. Undirected input yields both
    arcs, the forward one first. Costs and benefits start at zero.
    """
    path = Path(path)
    ids: dict[int, int] = {}
    src: list[int] = []
    dst: list[int] = []
    prob: list[float] = []
    seen: set[tuple[int, int]] = set()
    with_p = None

    def intern(tok: str, lineno: int) -> int:
        try:
            ext = int(tok)
        except ValueError:
            raise GraphError(f"{path}:{lineno}: bad node id {tok!r}") from None
        if ext < 0:
            raise GraphError(f"{path}:{lineno}: negative node id {ext}")
        return ids.setdefault(ext, len(ids))

    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            toks = line.split()
            if len(toks) not in (2, 3):
                raise GraphError(f"{path}:{lineno}: expected 'u v [p]', got {line!r}")
            if with_p is None:
                with_p = len(toks) == 3
            elif with_p != (len(toks) == 3):
                raise GraphError(f"{path}:{lineno}: inconsistent column count")
            u, v = intern(toks[0], lineno), intern(toks[1], lineno)
            if u == v:
                raise GraphError(f"{path}:{lineno}: self-loop on node {toks[0]}")
            p = math.nan
            if with_p:
                try:
                    p = float(toks[2])
                except ValueError:
                    raise GraphError(f"{path}:{lineno}: bad probability {toks[2]!r}") from None
                if not 0.0 < p < 1.0:
                    raise GraphError(f"{path}:{lineno}: probability {p} outside (0, 1)")
            for a, b in ((u, v),) if directed else ((u, v), (v, u)):
                if (a, b) in seen:
                    raise GraphError(f"{path}:{lineno}: duplicate edge {toks[0]} {toks[1]}")
                seen.add((a, b))
                src.append(a)
                dst.append(b)
                prob.append(p)

    n = len(ids)
    ext = np.empty(n, dtype=np.int64)
    for e, i in ids.items():
        ext[i] = e
    return Graph(
        n=n,
        src=np.array(src, dtype=np.int32),
        dst=np.array(dst, dtype=np.int32),
        prob=np.array(prob, dtype=np.float64),
        cost=np.zeros(n),
        benefit=np.zeros(n),
        ext_ids=ext,
        directed=directed,
        meta={"source": str(path)},
    )


def assign_weights_trivalency(g: Graph, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    prob = rng.choice(np.array(TRIVALENCY_VALUES), size=g.m)
    return g.replace(prob=prob, meta={"weights": "trivalency", "weights_seed": seed})


def assign_costs_degree(g: Graph) -> Graph:
    """Cost proportional to out-degree, normalised so the costs sum to ``n``."""
    if g.m == 0:
        raise GraphError("degree-proportional costs need at least one edge")
    deg = g.out_degree().astype(np.float64)
    return g.replace(cost=g.n * deg / deg.sum(), meta={"costs": "degree"})


def assign_costs_unit(g: Graph) -> Graph:
    return g.replace(cost=np.ones(g.n), meta={"costs": "unit"})


def assign_benefits_target(g: Graph, fraction: float, seed: int) -> Graph:
    """Give benefit 1 to ``floor(fraction * n)`` nodes chosen uniformly, 0 elsewhere."""
    if not 0.0 < fraction <= 1.0:
        raise GraphError(f"target fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    k = math.floor(fraction * g.n)
    benefit = np.zeros(g.n)
    benefit[rng.choice(g.n, size=k, replace=False)] = 1.0
    return g.replace(
        benefit=benefit,
        meta={"benefits": f"target:{fraction}", "benefits_seed": seed},
    )


def assign_benefits_uniform(g: Graph) -> Graph:
    return g.replace(benefit=np.ones(g.n), meta={"benefits": "uniform"})


@dataclasses.dataclass(frozen=True, eq=False)
class GraphConstants:
    """Per-graph constants shared by the samplers and the estimators.

    ``gamma[u]`` is the probability that at least one in-edge of ``u`` is
    live, ``Gamma`` the total benefit, ``Phi`` the gamma-weighted benefit and
    ``rho = Phi / Gamma`` (0 when ``Gamma`` is 0).
    """

    gamma: np.ndarray
    Gamma: float
    Phi: float

    @property
    def rho(self) -> float:
        return self.Phi / self.Gamma if self.Gamma > 0 else 0.0


def compute_constants(g: Graph) -> GraphConstants:
    if not g.has_probabilities:
        raise GraphError("edge probabilities have not been assigned")
    # log-domain product: thousands of tiny p would underflow a direct product
    log_none = np.zeros(g.n)
    np.add.at(log_none, g.dst, np.log1p(-g.prob))
    gamma = -np.expm1(log_none) + 0.0  # avoid -0.0 for nodes without in-edges
    Gamma = float(g.benefit.sum())
    Phi = float(np.dot(gamma, g.benefit))
    return GraphConstants(gamma=_frozen(gamma), Gamma=Gamma, Phi=min(Phi, Gamma))


def save_prepared(g: Graph, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = g.ext_ids
    with open(out / "edges.tsv", "w") as fh:
        fh.write("src\tdst\tp\n")
        for u, v, p in zip(ext[g.src].tolist(), ext[g.dst].tolist(), g.prob.tolist()):
            fh.write(f"{u}\t{v}\t{_FLOAT_FMT % p}\n")
    with open(out / "nodes.tsv", "w") as fh:
        fh.write("id\tcost\tbenefit\n")
        for e, c, b in zip(ext.tolist(), g.cost.tolist(), g.benefit.tolist()):
            fh.write(f"{e}\t{_FLOAT_FMT % c}\t{_FLOAT_FMT % b}\n")
    manifest = {
        "schema": PREPARED_SCHEMA,
        "n": g.n,
        "m": g.m,
        "directed": g.directed,
        **g.meta,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def load_prepared(path: str | Path) -> Graph:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    if manifest.get("schema") != PREPARED_SCHEMA:
        raise GraphError(f"{path}: unsupported prepared-graph schema {manifest.get('schema')}")
    nodes = np.loadtxt(path / "nodes.tsv", skiprows=1, ndmin=2, dtype=np.float64)
    ext = nodes[:, 0].astype(np.int64)
    index = {e: i for i, e in enumerate(ext.tolist())}
    edges = np.loadtxt(path / "edges.tsv", skiprows=1, ndmin=2, dtype=np.float64)
    if edges.size == 0:
        edges = np.zeros((0, 3))
    try:
        src = np.array([index[e] for e in edges[:, 0].astype(np.int64).tolist()], dtype=np.int32)
        dst = np.array([index[e] for e in edges[:, 1].astype(np.int64).tolist()], dtype=np.int32)
    except KeyError as exc:
        raise GraphError(f"{path}: edge refers to unknown node {exc.args[0]}") from None
    meta = {k: v for k, v in manifest.items() if k not in ("schema", "n", "m", "directed")}
    g = Graph(
        n=len(ext),
        src=src,
        dst=dst,
        prob=edges[:, 2],
        cost=nodes[:, 1],
        benefit=nodes[:, 2],
        ext_ids=ext,
        directed=manifest["directed"],
        meta=meta,
    )
    if g.n != manifest["n"] or g.m != manifest["m"]:
        raise GraphError(f"{path}: manifest counts do not match file contents")
    return g
