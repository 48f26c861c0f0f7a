"""Regular decompositions of graphs and matrices by minimum description length."""

__version__ = "0.1.0"

from .blockmodels import (  # noqa: E402
    BlockModelSpec,
    CountMatrix,
    Graph,
    Partition,
    PoissonBlockSpec,
    deterministic_partition,
    poisson_blowup,
    sample_bipartite_poisson,
    sample_graph,
    sample_poisson,
    sample_regularity_counterexample,
)
from .codelength import (  # noqa: E402
    comp_bounds,
    graph_block_code,
    matrix_objective,
    parametric_bound,
    poisson_block_code,
    two_part_objective,
)
from .harness import ExperimentReport, partition_distance, run_experiment  # noqa: E402
from .optimizer import (  # noqa: E402
    FitResult,
    argmax_k,
    argmax_k1k2,
    greedy_two_part_mdl,
    matrix_mdl_search,
)
