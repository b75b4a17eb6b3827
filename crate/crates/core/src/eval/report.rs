use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::coldstart::RankedList;
use crate::error::{Error, Result};
use crate::graph::NodeId;

use super::metrics::{map_at_k, ndcg_at_k, recall_at_k};

pub const DEFAULT_KS: [usize; 3] = [20, 100, 200];

/// Mean and population standard deviation over runs, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Identical inputs give exactly that value and a zero deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let first = values[0];
        let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCell {
    pub k: usize,
    pub recall: Stat,
    pub map: Stat,
    pub ndcg: Stat,
}

/// Query-averaged metrics for one run, in percent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub k: usize,
    pub recall: f64,
    pub map: f64,
    pub ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ks: Vec<usize>,
    pub runs: usize,
    /// Queries with a nonempty ground truth.
    pub queries: usize,
    /// Queries left out because their ground truth is empty.
    pub excluded: usize,
    pub cells: Vec<MetricCell>,
    pub per_run: Vec<Vec<RunMetrics>>,
}

impl EvalReport {
    pub fn cell(&self, k: usize) -> Option<&MetricCell> {
        self.cells.iter().find(|c| c.k == k)
    }
}

/// Scores `runs` rankings, produced by `source(run)`, against the held-out
/// out-edges of `queries`.
pub fn evaluate<F>(
    mut source: F,
    ground_truth: &BTreeMap<NodeId, Vec<(NodeId, f64)>>,
    queries: &[NodeId],
    ks: &[usize],
    runs: usize,
) -> Result<EvalReport>
where
    F: FnMut(usize) -> Result<Vec<RankedList>>,
{
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Invalid("Ks must be a nonempty list of positive integers".into()));
    }
    if runs == 0 {
        return Err(Error::Invalid("runs must be >= 1".into()));
    }
    let used: Vec<(NodeId, &[(NodeId, f64)])> = queries
        .iter()
        .filter_map(|q| match ground_truth.get(q) {
            Some(t) if !t.is_empty() => Some((*q, t.as_slice())),
            _ => None,
        })
        .collect();
    if used.is_empty() {
        return Err(Error::Invalid("no cold queries with ground truth to evaluate".into()));
    }

    let mut per_run = Vec::with_capacity(runs);
    for run in 0..runs {
        let lists = source(run)?;
        let by_query: HashMap<NodeId, Vec<NodeId>> = lists.iter().map(|l| (l.query, l.ids())).collect();
        let mut cells = Vec::with_capacity(ks.len());
        for &k in ks {
            let (mut r, mut m, mut g) = (0.0, 0.0, 0.0);
            for &(q, truth) in &used {
                let ranked = by_query
                    .get(&q)
                    .ok_or_else(|| Error::Invalid(format!("no ranked list for query {q}")))?;
                r += recall_at_k(ranked, truth, k).expect("nonempty truth");
                m += map_at_k(ranked, truth, k).expect("nonempty truth");
                g += ndcg_at_k(ranked, truth, k).expect("nonempty truth");
            }
            let n = used.len() as f64;
            cells.push(RunMetrics {
                k,
                recall: 100.0 * r / n,
                map: 100.0 * m / n,
                ndcg: 100.0 * g / n,
            });
        }
        per_run.push(cells);
    }

    let cells = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let col = |f: fn(&RunMetrics) -> f64| Stat::of(&per_run.iter().map(|r| f(&r[i])).collect::<Vec<_>>());
            MetricCell {
                k,
                recall: col(|c| c.recall),
                map: col(|c| c.map),
                ndcg: col(|c| c.ndcg),
            }
        })
        .collect();
    Ok(EvalReport {
        ks: ks.to_vec(),
        runs,
        queries: used.len(),
        excluded: queries.len() - used.len(),
        cells,
        per_run,
    })
}
