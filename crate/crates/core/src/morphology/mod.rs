//! Morphology graphs, fused Gromov-Wasserstein distances between them,
//! similarity normalization, and hierarchical grouping of embodiments.

mod cluster;
mod fgw;
mod graph;

pub use cluster::{cluster, load_group_assignment, save_group_assignment, GroupAssignment};
pub use fgw::{
    distance_matrix, fgw_call_count, fgw_distance, load_distance_csv, save_matrix_csv,
    similarity_from_distance, DistanceMatrix,
};
pub use graph::{build_graph, shortest_paths, MorphGraph, MorphNode, NodeKind, D_FEAT};
