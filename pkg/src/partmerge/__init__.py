"""Partition-merge: carve a graph into small low-diameter blocks, solve each
block with a centralized algorithm, stitch the solutions and certify the
loss against the global optimum."""

from .graph import (
    Graph,
    GrowthProfile,
    ball,
    bfs_distances,
    estimate_growth,
    generate_geometric,
    generate_grid,
    load_edge_list,
    max_degree,
)
from .modularity import (
    ModCertificate,
    exact_modularity,
    greedy_modularity,
    merge_clusterings,
    modularity,
    modularity_lower_bound,
    pm_cluster,
    solve_blocks,
)
from .mrf import (
    MapCertificate,
    PairwiseMRF,
    evaluate_H,
    exact_map,
    icm,
    map_lower_bound,
    pm_map,
    psi_gap,
    restrict,
)
from .partition import (
    ParamRecommendation,
    Partition,
    PartitionParams,
    boundary_edges,
    edge_cut_bound,
    hop_ball_bound,
    partition,
    sample_radius,
    select_params,
)

__version__ = "0.1.0"
