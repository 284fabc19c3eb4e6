//! Parameter space, graphs, sampling and likelihood of the planted
//! bi-section model.

pub mod graph;
pub mod labels;
pub mod likelihood;

pub use graph::{sample_graph, sample_graph_with, Graph};
pub use labels::{
    canonicalize, enumerate_class, enumerate_labelings, enumerate_labelings_with_cap, hamming,
    hamming_bits, labeling_count, sym_distance, sym_distance_bits, LabelVector, Labelings,
    DEFAULT_ENUMERATION_CAP, MAX_ENUMERATION_CAP, MAX_VERTICES,
};
pub use likelihood::{
    discrepancy_sets, edge_counts, edge_probs_from_sparsity, log_likelihood, log_likelihood_ratio,
    log_likelihood_raw, EdgeCounts, EdgeModel, LikelihoodRatioStats, Regime, SparsityParams,
    WithinEdgeTable,
};
