use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DirectedWeightedGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-10,
            max_iter: 1000,
        }
    }
}

/// Power iteration on the weight-normalized transition matrix with uniform
/// teleport. Nodes without out-weight spread their score uniformly.
/// Stops when the L1 change drops below `tol`.
pub fn pagerank(graph: &DirectedWeightedGraph, config: PageRankConfig) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::Invalid("pagerank of an empty graph".into()));
    }
    let alpha = config.damping;
    let out_weight: Vec<f64> = (0..n).map(|i| graph.out_edges(i).iter().map(|e| e.1).sum()).collect();
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut residual = f64::INFINITY;
    for _ in 0..config.max_iter {
        let dangling: f64 = (0..n).filter(|&i| out_weight[i] <= 0.0).map(|i| x[i]).sum();
        let base = (alpha * dangling + 1.0 - alpha) * uniform;
        let mut next = vec![base; n];
        for i in 0..n {
            if out_weight[i] > 0.0 {
                let share = alpha * x[i] / out_weight[i];
                for &(j, w) in graph.out_edges(i) {
                    next[j] += share * w;
                }
            }
        }
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if residual < config.tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        method: "pagerank",
        iterations: config.max_iter,
        residual,
    })
}

/// Edge length used for shortest paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathLength {
    /// `1 / weight`: stronger similarity means a shorter edge.
    #[default]
    InverseWeight,
    Uniform,
}

impl std::str::FromStr for PathLength {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse_weight" => Ok(PathLength::InverseWeight),
            "uniform" => Ok(PathLength::Uniform),
            other => Err(Error::Invalid(format!("unknown path length `{other}`"))),
        }
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // min-heap on distance, then node id
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dependencies of every node on shortest paths from `s`.
fn source_dependency(graph: &DirectedWeightedGraph, lengths: PathLength, s: usize, delta: &mut [f64]) {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut settled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    sigma[s] = 1.0;
    heap.push(HeapItem(0.0, s));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, weight) in graph.out_edges(v) {
            let len = match lengths {
                PathLength::InverseWeight => 1.0 / weight,
                PathLength::Uniform => 1.0,
            };
            let alt = d + len;
            if alt < dist[w] {
                dist[w] = alt;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(HeapItem(alt, w));
            } else if alt == dist[w] && !settled[w] {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    delta.iter_mut().for_each(|x| *x = 0.0);
    for &w in order.iter().rev() {
        for &v in &preds[w] {
            delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
        }
    }
    delta[s] = 0.0;
}

const SOURCE_CHUNK: usize = 64;

/// Unnormalized directed betweenness centrality (Brandes accumulation over
/// Dijkstra shortest paths). Zero-weight edges are ignored under
/// [`PathLength::InverseWeight`]. Sources are processed in fixed chunks
/// whose partial sums are combined in source order, so the result does not
/// depend on the thread count.
pub fn betweenness(graph: &DirectedWeightedGraph, lengths: PathLength) -> Vec<f64> {
    let n = graph.node_count();
    let pruned = (lengths == PathLength::InverseWeight).then(|| {
        DirectedWeightedGraph::from_edges(n, graph.edges().filter(|e| e.2 > 0.0)).expect("subset of a valid graph")
    });
    let graph = pruned.as_ref().unwrap_or(graph);
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n];
            let mut delta = vec![0.0; n];
            for &s in chunk {
                source_dependency(graph, lengths, s, &mut delta);
                for (a, d) in acc.iter_mut().zip(&delta) {
                    *a += d;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n];
    for p in partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}
