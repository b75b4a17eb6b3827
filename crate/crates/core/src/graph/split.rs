use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::numerics::seeded_rng;

use super::{DataSplit, DirectedWeightedGraph, MaskedGraphView, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SplitPart {
    Train,
    Valid,
    Test,
}

impl std::str::FromStr for SplitPart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" | "warm" => Ok(SplitPart::Train),
            "valid" | "validation" => Ok(SplitPart::Valid),
            "test" => Ok(SplitPart::Test),
            other => Err(Error::Invalid(format!("unknown split part `{other}`"))),
        }
    }
}

impl std::fmt::Display for SplitPart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitPart::Train => "train",
            SplitPart::Valid => "valid",
            SplitPart::Test => "test",
        })
    }
}

/// Uniformly random warm/validation/test partition.
///
/// Validation and test sizes are `floor(ratio · n)`; the remainder is warm.
pub fn make_split(n: usize, ratios: [f64; 3], seed: u64) -> Result<DataSplit> {
    if ratios.iter().any(|r| !(*r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let size = |r: f64| (r * n as f64 + 1e-9).floor() as usize;
    if ratios.iter().any(|&r| size(r) == 0) {
        return Err(Error::Invalid(format!(
            "split ratios {ratios:?} leave an empty part for n = {n}"
        )));
    }
    let (n_valid, n_test) = (size(ratios[1]), size(ratios[2]));
    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(&mut seeded_rng(seed));
    let valid = perm[..n_valid].to_vec();
    let test = perm[n_valid..n_valid + n_test].to_vec();
    let warm = perm[n_valid + n_test..].to_vec();
    DataSplit::new(n, warm, valid, test)
}

/// Isolates every cold node: both its incoming and outgoing edges leave the
/// training graph, and its outgoing edges become ground truth.
pub fn mask_cold(graph: &DirectedWeightedGraph, split: &DataSplit) -> Result<MaskedGraphView> {
    let n = graph.node_count();
    if split.node_count() != n {
        return Err(Error::Invalid(format!(
            "split covers {} nodes, graph has {n}",
            split.node_count()
        )));
    }
    let cold_ids = split.cold();
    let mut is_cold = vec![false; n];
    for &c in &cold_ids {
        is_cold[c] = true;
    }
    let edges = (0..n)
        .map(|s| {
            if is_cold[s] {
                Vec::new()
            } else {
                graph
                    .out_edges(s)
                    .iter()
                    .filter(|&&(t, _)| !is_cold[t])
                    .copied()
                    .collect()
            }
        })
        .collect();
    let train_graph = DirectedWeightedGraph::from_adjacency(edges)?;

    let ground_truth = cold_ids
        .iter()
        .map(|&c| {
            let mut truth: Vec<(NodeId, f64)> = graph
                .out_edges(c)
                .iter()
                .filter(|&&(_, w)| w > 0.0)
                .copied()
                .collect();
            truth.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            (c, truth)
        })
        .collect::<BTreeMap<_, _>>();

    Ok(MaskedGraphView {
        train_graph,
        warm_ids: split.warm.clone(),
        cold_ids,
        ground_truth,
    })
}
