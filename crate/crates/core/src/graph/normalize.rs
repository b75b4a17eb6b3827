use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseRowMatrix};

use super::{AttributeTable, DirectedWeightedGraph, MaskedGraphView, NodeId};

/// `D_out⁻¹ (A + I)` for `graph` followed by `extra_isolated` nodes that
/// only carry a self-loop.
pub fn normalize_out_degree(graph: &DirectedWeightedGraph, extra_isolated: usize) -> SparseRowMatrix {
    let n = graph.node_count();
    let total = n + extra_isolated;
    let mut rows = Vec::with_capacity(total);
    for i in 0..n {
        let out = graph.out_edges(i);
        let degree = 1.0 + out.iter().map(|&(_, w)| w).sum::<f64>();
        let mut row = Vec::with_capacity(out.len() + 1);
        let mut self_placed = false;
        for &(t, w) in out {
            if !self_placed && t > i {
                row.push((i, 1.0 / degree));
                self_placed = true;
            }
            row.push((t, w / degree));
        }
        if !self_placed {
            row.push((i, 1.0 / degree));
        }
        rows.push(row);
    }
    for i in n..total {
        rows.push(vec![(i, 1.0)]);
    }
    SparseRowMatrix::from_rows(total, rows).expect("normalized rows are valid")
}

/// Encoder inputs for warm nodes plus appended cold nodes.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    /// `(n_warm + m)²` normalized adjacency; cold rows are unit self-loops.
    pub adjacency: SparseRowMatrix,
    /// Warm attribute rows, then cold rows.
    pub features: DenseMatrix,
    /// Extended row → original node id.
    pub index_map: Vec<NodeId>,
    warm_count: usize,
}

impl ExtendedSystem {
    pub fn warm_count(&self) -> usize {
        self.warm_count
    }

    pub fn cold_count(&self) -> usize {
        self.index_map.len() - self.warm_count
    }
}

/// Appends `cold_ids` as isolated nodes to the warm training graph.
pub fn extend_with_cold(
    masked: &MaskedGraphView,
    attrs: &AttributeTable,
    cold_ids: &[NodeId],
) -> Result<ExtendedSystem> {
    let n = masked.node_count();
    let mut is_warm = vec![false; n];
    for &w in &masked.warm_ids {
        is_warm[w] = true;
    }
    for &c in cold_ids {
        if c >= attrs.rows() || c >= n {
            return Err(Error::Invalid(format!("cold node {c} has no attribute row")));
        }
        if is_warm[c] {
            return Err(Error::Invalid(format!("node {c} is warm, not cold")));
        }
    }
    let warm_graph = masked.warm_subgraph();
    let adjacency = normalize_out_degree(&warm_graph, cold_ids.len());
    let mut index_map = masked.warm_ids.clone();
    index_map.extend_from_slice(cold_ids);
    let features = attrs.select(&index_map);
    Ok(ExtendedSystem {
        adjacency,
        features,
        index_map,
        warm_count: masked.warm_ids.len(),
    })
}
