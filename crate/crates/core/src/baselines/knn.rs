use std::collections::HashMap;

use crate::coldstart::{RankedEntry, RankedList};
use crate::error::{Error, Result};
use crate::graph::{AttributeTable, MaskedGraphView, NodeId, NodeMeta};
use crate::numerics::sq_dist;

pub const DEFAULT_POOL: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rerank {
    None,
    Popularity,
    InDegree,
}

/// Euclidean nearest warm neighbors in attribute space, optionally taking
/// the `pool` nearest and reordering them by a node measure.
#[derive(Debug, Clone)]
pub struct KnnRanker {
    warm_ids: Vec<NodeId>,
    rerank: Rerank,
    pool: usize,
    /// Larger is better; nodes without a value sort last.
    measure: HashMap<NodeId, f64>,
}

impl KnnRanker {
    pub fn new(warm_ids: Vec<NodeId>, rerank: Rerank, pool: usize) -> Self {
        Self {
            warm_ids,
            rerank,
            pool,
            measure: HashMap::new(),
        }
    }

    /// Fills the re-ranking measure: negated popularity rank, or weighted
    /// in-degree in the training graph.
    pub fn with_measure_from(mut self, masked: &MaskedGraphView, meta: &NodeMeta) -> Self {
        self.measure = match self.rerank {
            Rerank::None => HashMap::new(),
            Rerank::Popularity => self
                .warm_ids
                .iter()
                .filter_map(|&w| meta.popularity_rank[w].map(|r| (w, -(r as f64))))
                .collect(),
            Rerank::InDegree => {
                let deg = masked.train_graph.weighted_in_degree();
                self.warm_ids.iter().map(|&w| (w, deg[w])).collect()
            }
        };
        self
    }

    pub fn with_measure(mut self, measure: HashMap<NodeId, f64>) -> Self {
        self.measure = measure;
        self
    }

    pub fn rank(&self, attrs: &AttributeTable, query: NodeId, k: usize) -> Result<RankedList> {
        if query >= attrs.rows() {
            return Err(Error::Invalid(format!("query {query} has no attribute row")));
        }
        knn_list(attrs, &self.warm_ids, attrs.row(query), query, k, self.rerank, self.pool, &self.measure)
    }
}

/// Nearest warm nodes to `query_vector`; the score is the negated distance.
/// With re-ranking, the `pool` nearest are reordered by `measure` (score =
/// measure) and the result is flagged short if `pool < k`.
#[allow(clippy::too_many_arguments)]
pub fn knn_list(
    attrs: &AttributeTable,
    warm_ids: &[NodeId],
    query_vector: &[f64],
    query: NodeId,
    k: usize,
    rerank: Rerank,
    pool: usize,
    measure: &HashMap<NodeId, f64>,
) -> Result<RankedList> {
    if query_vector.len() != attrs.dim() {
        return Err(Error::shape(
            "knn",
            format!("query of length {} vs {} attribute columns", query_vector.len(), attrs.dim()),
        ));
    }
    let by_distance = warm_ids.iter().map(|&w| {
        let d2 = sq_dist(query_vector, attrs.row(w));
        RankedEntry {
            candidate: w,
            score: -d2.sqrt(),
            key: -d2,
        }
    });
    if rerank == Rerank::None {
        return Ok(RankedList::top_k(query, by_distance, k));
    }
    let nearest = RankedList::top_k(query, by_distance, pool);
    let reranked = nearest.entries.iter().map(|e| {
        let m = measure.get(&e.candidate).copied().unwrap_or(f64::NEG_INFINITY);
        RankedEntry {
            candidate: e.candidate,
            score: m,
            key: m,
        }
    });
    Ok(RankedList::top_k(query, reranked, k))
}
