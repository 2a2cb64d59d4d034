"""Exact polylog-linear integration of vertex fields over weighted trees.

The pipeline: decompose a tree once into an IntegratorTree, then multiply
any map-of-distances matrix by any tensor field through structured
cross-term multiplications, exactly. Brute-force integrators, a learnable
rational-map fitter, a matvec-only eigensolver and a masked linear
attention mechanism build on the same engine.
"""

from .engine import (
    IntegrationRequest,
    IntegrationSession,
    bgfi_integrate,
    btfi_integrate,
    ftfi_integrate,
)
from .errors import NumericError, ParseError, PreconditionError, TreeFieldError
from .graphs import (
    Mesh,
    TensorField,
    WeightedGraph,
    WeightedTree,
    all_pairs_distances,
    graph_shortest_paths,
    load_edge_list,
    load_off_mesh,
    minimum_spanning_tree,
    path_with_random_edges,
    random_tree,
    tree_distances_from,
)
from .itree import IntegratorTree, build_integrator_tree, it_stats
from .separator import PivotDecomposition, pivot_decompose

__all__ = [
    "IntegrationRequest",
    "IntegrationSession",
    "IntegratorTree",
    "Mesh",
    "NumericError",
    "ParseError",
    "PivotDecomposition",
    "PreconditionError",
    "TensorField",
    "TreeFieldError",
    "WeightedGraph",
    "WeightedTree",
    "all_pairs_distances",
    "bgfi_integrate",
    "btfi_integrate",
    "build_integrator_tree",
    "ftfi_integrate",
    "graph_shortest_paths",
    "it_stats",
    "load_edge_list",
    "load_off_mesh",
    "minimum_spanning_tree",
    "path_with_random_edges",
    "pivot_decompose",
    "random_tree",
    "tree_distances_from",
]

__version__ = "0.1.0"
