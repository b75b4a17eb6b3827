//! The directed, weighted, attributed similar-items graph: types, file
//! loading, train/validation/test splits, cold-node masking, and the
//! out-degree normalization fed to the encoder.

mod io;
mod normalize;
mod split;

pub use io::{load_dataset, read_split, write_dataset, write_id_table, write_split};
pub use normalize::{extend_with_cold, normalize_out_degree, ExtendedSystem};
pub use split::{make_split, mask_cold, SplitPart};

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, SparseRowMatrix};

/// Dense node index, `0..n`.
pub type NodeId = usize;

/// Per-source sorted weighted edge lists.
///
/// Weights lie in `[0, 1]`, there are no self-loops and no duplicate
/// `(src, dst)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedWeightedGraph {
    n: usize,
    edges: Vec<Vec<(NodeId, f64)>>,
    k_hint: usize,
}

impl DirectedWeightedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: vec![Vec::new(); n],
            k_hint: 0,
        }
    }

    /// Builds a graph from `(src, dst, weight)` triples, validating every
    /// invariant.
    pub fn from_edges(n: usize, triples: impl IntoIterator<Item = (NodeId, NodeId, f64)>) -> Result<Self> {
        let mut edges = vec![Vec::new(); n];
        for (s, t, w) in triples {
            if s >= n || t >= n {
                return Err(Error::Invalid(format!("edge {s}->{t} outside 0..{n}")));
            }
            if s == t {
                return Err(Error::Invalid(format!("self-loop on node {s}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Invalid(format!("edge {s}->{t} has weight {w} outside [0,1]")));
            }
            edges[s].push((t, w));
        }
        Self::from_adjacency(edges)
    }

    pub fn from_adjacency(mut edges: Vec<Vec<(NodeId, f64)>>) -> Result<Self> {
        let n = edges.len();
        for (s, list) in edges.iter_mut().enumerate() {
            list.sort_by_key(|&(t, _)| t);
            for w in list.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Invalid(format!("duplicate edge {s}->{}", w[0].0)));
                }
            }
            for &(t, w) in list.iter() {
                if t >= n || t == s || !(0.0..=1.0).contains(&w) {
                    return Err(Error::Invalid(format!("invalid edge {s}->{t} ({w})")));
                }
            }
        }
        let k_hint = edges.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self { n, edges, k_hint })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Expected out-degree: the largest observed one.
    pub fn k_hint(&self) -> usize {
        self.k_hint
    }

    pub fn out_edges(&self, src: NodeId) -> &[(NodeId, f64)] {
        &self.edges[src]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.edges.iter().map(Vec::len).collect()
    }

    pub fn weight(&self, src: NodeId, dst: NodeId) -> f64 {
        let list = &self.edges[src];
        list.binary_search_by_key(&dst, |&(t, _)| t)
            .map(|p| list[p].1)
            .unwrap_or(0.0)
    }

    /// Sum of weights pointing at each node.
    pub fn weighted_in_degree(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.n];
        for list in &self.edges {
            for &(t, w) in list {
                deg[t] += w;
            }
        }
        deg
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, f64)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .flat_map(|(s, l)| l.iter().map(move |&(t, w)| (s, t, w)))
    }

    /// Weighted adjacency `A` as a sparse matrix.
    pub fn to_sparse(&self) -> SparseRowMatrix {
        SparseRowMatrix::from_rows(self.n, self.edges.clone()).expect("graph invariants hold")
    }

    /// Subgraph induced by `nodes`, relabelled `0..nodes.len()` in the
    /// order given.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> DirectedWeightedGraph {
        let mut local = vec![usize::MAX; self.n];
        for (k, &g) in nodes.iter().enumerate() {
            local[g] = k;
        }
        let edges = nodes
            .iter()
            .map(|&g| {
                self.edges[g]
                    .iter()
                    .filter(|&&(t, _)| local[t] != usize::MAX)
                    .map(|&(t, w)| (local[t], w))
                    .collect()
            })
            .collect();
        DirectedWeightedGraph::from_adjacency(edges).expect("subgraph of a valid graph")
    }
}

/// `n × f` matrix of item description vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    values: DenseMatrix,
}

impl AttributeTable {
    pub fn new(values: DenseMatrix) -> Result<Self> {
        if !values.is_finite() {
            return Err(Error::Invalid("attribute table contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: NodeId) -> &[f64] {
        self.values.row(i)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn select(&self, ids: &[NodeId]) -> DenseMatrix {
        self.values.select_rows(ids)
    }
}

/// Usage-derived metadata that is never part of the attribute vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeMeta {
    /// 1 = most popular.
    pub popularity_rank: Vec<Option<u32>>,
    pub country: Vec<Option<String>>,
}

impl NodeMeta {
    pub fn empty(n: usize) -> Self {
        Self {
            popularity_rank: vec![None; n],
            country: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.popularity_rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.popularity_rank.is_empty()
    }

    /// Ranks within the same country (1 = most popular there), computed
    /// over `subset` only.
    pub fn rank_within_country(&self, subset: &[NodeId]) -> HashMap<NodeId, u32> {
        let mut by_country: BTreeMap<&str, Vec<(u32, NodeId)>> = BTreeMap::new();
        for &i in subset {
            if let (Some(r), Some(c)) = (self.popularity_rank[i], self.country[i].as_deref()) {
                by_country.entry(c).or_default().push((r, i));
            }
        }
        let mut out = HashMap::new();
        for (_, mut list) in by_country {
            list.sort_unstable();
            for (pos, (_, i)) in list.into_iter().enumerate() {
                out.insert(i, pos as u32 + 1);
            }
        }
        out
    }
}

/// A validated graph, attribute table and metadata sharing the same node
/// indexing, plus the external ids in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub graph: DirectedWeightedGraph,
    pub attrs: AttributeTable,
    pub meta: NodeMeta,
}

impl Dataset {
    pub fn new(
        ids: Vec<String>,
        graph: DirectedWeightedGraph,
        attrs: AttributeTable,
        meta: NodeMeta,
    ) -> Result<Self> {
        let n = ids.len();
        if graph.node_count() != n || attrs.rows() != n || meta.len() != n {
            return Err(Error::shape(
                "dataset",
                format!(
                    "{n} ids, {} graph nodes, {} attribute rows, {} meta rows",
                    graph.node_count(),
                    attrs.rows(),
                    meta.len()
                ),
            ));
        }
        Ok(Self {
            ids,
            graph,
            attrs,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index(&self) -> HashMap<&str, NodeId> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }
}

/// Disjoint warm / validation / test node sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub warm: Vec<NodeId>,
    pub valid: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

impl DataSplit {
    pub fn new(n: usize, mut warm: Vec<NodeId>, mut valid: Vec<NodeId>, mut test: Vec<NodeId>) -> Result<Self> {
        warm.sort_unstable();
        valid.sort_unstable();
        test.sort_unstable();
        let mut seen = vec![false; n];
        for &i in warm.iter().chain(&valid).chain(&test) {
            if i >= n {
                return Err(Error::Invalid(format!("split id {i} outside 0..{n}")));
            }
            if seen[i] {
                return Err(Error::Invalid(format!("node {i} appears in two split parts")));
            }
            seen[i] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("node {missing} missing from split")));
        }
        Ok(Self { warm, valid, test })
    }

    pub fn node_count(&self) -> usize {
        self.warm.len() + self.valid.len() + self.test.len()
    }

    pub fn part(&self, part: SplitPart) -> &[NodeId] {
        match part {
            SplitPart::Train => &self.warm,
            SplitPart::Valid => &self.valid,
            SplitPart::Test => &self.test,
        }
    }

    /// Validation and test nodes, sorted.
    pub fn cold(&self) -> Vec<NodeId> {
        let mut c: Vec<NodeId> = self.valid.iter().chain(&self.test).copied().collect();
        c.sort_unstable();
        c
    }
}

/// Training graph with every cold node isolated, plus the held-out
/// out-edges of the cold nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGraphView {
    /// Same node indexing as the full graph; cold nodes have no edges.
    pub train_graph: DirectedWeightedGraph,
    pub warm_ids: Vec<NodeId>,
    pub cold_ids: Vec<NodeId>,
    /// Cold id → original out-edges, by descending weight then ascending id.
    pub ground_truth: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
}

impl MaskedGraphView {
    /// The training graph restricted to warm nodes, relabelled so that local
    /// index `k` is `warm_ids[k]`.
    pub fn warm_subgraph(&self) -> DirectedWeightedGraph {
        self.train_graph.induced_subgraph(&self.warm_ids)
    }

    pub fn node_count(&self) -> usize {
        self.train_graph.node_count()
    }
}
