//! Influence-aware causal node embedding and ranking for complex networks.
//!
//! The pipeline: generate synthetic training networks, label nodes with SIR
//! spreading scores, embed nodes via biased random walks + skip-gram, train a
//! causal graph autoencoder with an acyclicity-constrained adjacency over the
//! latent features and a listwise ranking head, then transfer the trained
//! model to arbitrary edge-list networks and score the rankings with
//! Kendall's tau against SIR ground truth, alongside classical centrality
//! baselines.

pub mod autodiff;
pub mod baselines;
pub mod embed;
pub mod eval;
pub mod graph;
pub mod model;
pub mod netgen;
pub mod seeds;
pub mod sir;

pub use graph::{DegreeStats, Graph, GraphError, NormalizedAdjacency};
