use std::collections::HashMap;

use crate::coldstart::{RankedEntry, RankedList};
use crate::graph::{DirectedWeightedGraph, NodeId, NodeMeta};

/// A query-independent ordering of warm nodes, plus one per country.
#[derive(Debug, Clone)]
pub struct TemplateRanker {
    global: Vec<RankedEntry>,
    by_country: HashMap<String, Vec<RankedEntry>>,
}

impl TemplateRanker {
    /// Sorts `(node, key)` pairs by descending key, ties by ascending id.
    fn from_keys(keyed: Vec<(NodeId, f64)>, meta: &NodeMeta) -> Self {
        let n = keyed.len();
        let all = RankedList::top_k(
            NodeId::MAX,
            keyed.into_iter().map(|(c, key)| RankedEntry {
                candidate: c,
                score: key,
                key,
            }),
            n,
        );
        let mut by_country: HashMap<String, Vec<RankedEntry>> = HashMap::new();
        for e in &all.entries {
            if let Some(c) = &meta.country[e.candidate] {
                by_country.entry(c.clone()).or_default().push(*e);
            }
        }
        Self {
            global: all.entries,
            by_country,
        }
    }

    /// Warm nodes with a popularity rank, most popular first. The score is
    /// the negated rank.
    pub fn popularity(meta: &NodeMeta, warm_ids: &[NodeId]) -> Self {
        let keyed = warm_ids
            .iter()
            .filter_map(|&w| meta.popularity_rank[w].map(|r| (w, -(r as f64))))
            .collect();
        Self::from_keys(keyed, meta)
    }

    /// Warm nodes by descending weighted in-degree in the training graph.
    pub fn in_degree(train_graph: &DirectedWeightedGraph, meta: &NodeMeta, warm_ids: &[NodeId]) -> Self {
        let deg = train_graph.weighted_in_degree();
        Self::from_keys(warm_ids.iter().map(|&w| (w, deg[w])).collect(), meta)
    }

    /// First `k` entries other than `query`. With `country = Some(c)`, the
    /// list is restricted to that country; an unknown or missing country
    /// falls back to the global list and sets `fallback`.
    pub fn rank(&self, query: NodeId, country: Option<Option<&str>>, k: usize) -> RankedList {
        let (source, fallback) = match country {
            None => (&self.global, false),
            Some(c) => match c.and_then(|c| self.by_country.get(c)) {
                Some(list) => (list, false),
                None => (&self.global, true),
            },
        };
        let entries: Vec<RankedEntry> = source.iter().filter(|e| e.candidate != query).take(k).copied().collect();
        RankedList {
            query,
            short: entries.len() < k,
            entries,
            fallback,
        }
    }
}

pub fn popularity_list(
    meta: &NodeMeta,
    warm_ids: &[NodeId],
    query: NodeId,
    k: usize,
    by_country: bool,
) -> RankedList {
    let country = by_country.then(|| meta.country[query].as_deref());
    TemplateRanker::popularity(meta, warm_ids).rank(query, country, k)
}

pub fn in_degree_list(
    train_graph: &DirectedWeightedGraph,
    meta: &NodeMeta,
    warm_ids: &[NodeId],
    query: NodeId,
    k: usize,
    by_country: bool,
) -> RankedList {
    let country = by_country.then(|| meta.country[query].as_deref());
    TemplateRanker::in_degree(train_graph, meta, warm_ids).rank(query, country, k)
}
