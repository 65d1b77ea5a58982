"""Cost-aware targeted seed selection with importance benefit sampling."""

from .bmc import SeedSet, iga
from .graph import Graph, GraphConstants, compute_constants, from_edges, load_edge_list
from .ivm import IvmConfig, run_ivm
from .sampling import SamplePool

__all__ = [
    "Graph",
    "GraphConstants",
    "IvmConfig",
    "SamplePool",
    "SeedSet",
    "compute_constants",
    "from_edges",
    "iga",
    "load_edge_list",
    "run_ivm",
]
__version__ = "0.1.0"
