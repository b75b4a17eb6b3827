//! Gravity-inspired graph autoencoders for cold-start similar-item ranking.
//!
//! A directed, weighted "similar items" graph with item attributes is
//! embedded by a two-layer GCN encoder. Each node gets a position and a
//! mass; the probability that `i` points to `j` grows with the mass of `j`
//! and shrinks with their distance. Cold items, known only by their
//! attributes, are pushed through the trained encoder as isolated nodes and
//! ranked against the rest of the catalog.
//!
//! Modules follow the pipeline: [`graph`] (loading, splitting, masking,
//! normalization), [`numerics`], [`models`] (encoders, decoders, losses,
//! training, checkpoints), [`coldstart`] (projection and ranking),
//! [`baselines`], and [`eval`] (metrics, reports, centrality, mass
//! analysis).

pub mod baselines;
pub mod coldstart;
pub mod error;
pub mod eval;
pub mod graph;
pub mod models;
pub mod numerics;
pub mod synthetic;

pub use coldstart::{RankedEntry, RankedList};
pub use error::{Error, Result};
pub use graph::{
    AttributeTable, DataSplit, Dataset, DirectedWeightedGraph, MaskedGraphView, NodeId, NodeMeta,
};
pub use models::{
    DecoderKind, Embedding, GcnParams, GravityEmbedding, LossTrace, ModelKind, TrainConfig,
};
pub use numerics::{DenseMatrix, SparseRowMatrix};
