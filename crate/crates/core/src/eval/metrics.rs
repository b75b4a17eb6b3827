//! Per-query ranking metrics. Each returns `None` when the ground truth is
//! empty; such queries are left out of aggregates.

use std::collections::HashMap;

use crate::graph::NodeId;

/// Fraction of the ground-truth items found in the first `k` ranked ids.
pub fn recall_at_k(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let hits = ranked.iter().take(k).filter(|c| truth.iter().any(|(t, _)| t == *c)).count();
    Some(hits as f64 / truth.len() as f64)
}

/// Average precision over the first `k` ranks with binary relevance,
/// normalized by `min(k, |truth|)`.
pub fn map_at_k(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, c) in ranked.iter().take(k).enumerate() {
        if truth.iter().any(|(t, _)| t == c) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Some(sum / k.min(truth.len()) as f64)
}

/// DCG with gains `2^w − 1` (w = ground-truth weight) and `log2(r + 1)`
/// discounts, divided by the DCG of the truth sorted by weight.
pub fn ndcg_at_k(ranked: &[NodeId], truth: &[(NodeId, f64)], k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let gain = |w: f64| w.exp2() - 1.0;
    let weight: HashMap<NodeId, f64> = truth.iter().copied().collect();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, c)| weight.get(c).map_or(0.0, |&w| gain(w) / ((r + 2) as f64).log2()))
        .sum();
    let mut ideal: Vec<f64> = truth.iter().map(|&(_, w)| w).collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(r, &w)| gain(w) / ((r + 2) as f64).log2())
        .sum();
    Some(if idcg > 0.0 { dcg / idcg } else { 0.0 })
}
