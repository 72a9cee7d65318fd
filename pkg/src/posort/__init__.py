"""Sorting a hidden linear order when part of it is already known.

The known part is a partial order ``P``; the sorters query a comparison
source and stay within a constant factor of ``log2 e(P)`` comparisons,
where ``e(P)`` counts the linear extensions of ``P``.
"""

from .entropy import (
    BipartiteConvexGraph,
    KMPartition,
    StabPoint,
    chain_size_entropy,
    convex_bipartite_entropy,
    greedy_point,
    km_partition_bruteforce,
    point_entropy,
    width2_entropy,
)
from .exceptions import (
    CycleError,
    InternalConsistencyError,
    InvalidCoverError,
    NotAnExtensionError,
    PosortError,
    StructureError,
    TooLargeError,
)
from .merge import huffman_merge, huffman_schedule, hwang_lin_merge, linear_merge
from .mupi import MupiEngine, TwoChainCover, build_two_chain_cover, mupi, mupi_core
from .oracle import ComparisonSource, HiddenOrderOracle, IntervalAdversary
from .poset import (
    ChainDecomposition,
    LevelDecomposition,
    Poset,
    count_linear_extensions,
    greedy_chain_decomposition,
    levels,
    linear_extensions,
    maximum_chain,
    random_linear_extension,
    random_poset,
    transitive_closure,
)
from .sorters import (
    CautiousMergeSorter,
    InsertionSorter,
    MergeSorter,
    PreprocessedSorter,
    SortResult,
    cautious_merge_sort,
    insertion_sort_supi,
    merge_sort_supi,
    preprocessed_sort,
)

__version__ = "0.1.0"
