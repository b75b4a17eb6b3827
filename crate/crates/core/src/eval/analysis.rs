use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::coldstart::RankedList;
use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, NodeId, NodeMeta};

use super::centrality::{betweenness, pagerank, PageRankConfig, PathLength};

/// Pearson correlation; `None` for fewer than two points or a constant input.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.len() < 2 {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing the average of their positions.
pub fn fractional_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the fractional ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&fractional_ranks(a), &fractional_ranks(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub measure: String,
    /// Nodes where the measure is defined.
    pub nodes: usize,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable {
    pub rows: Vec<CorrelationRow>,
}

impl CorrelationTable {
    pub fn row(&self, measure: &str) -> Option<&CorrelationRow> {
        self.rows.iter().find(|r| r.measure == measure)
    }

    /// `measure<TAB>nodes<TAB>pearson<TAB>spearman`, undefined values as `NA`.
    pub fn to_tsv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
        let mut s = String::from("measure\tnodes\tpearson\tspearman\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.measure, r.nodes, fmt(r.pearson), fmt(r.spearman)));
        }
        s
    }
}

/// The five node measures compared with learned masses, over warm nodes in
/// `warm_ids` order. Popularity ranks are reversed so larger means more
/// popular; nodes without a rank have no value.
pub fn node_measures(
    warm_graph: &DirectedWeightedGraph,
    warm_ids: &[NodeId],
    meta: &NodeMeta,
    lengths: PathLength,
) -> Result<Vec<(String, Vec<Option<f64>>)>> {
    if warm_graph.node_count() != warm_ids.len() {
        return Err(Error::shape("node_measures", "warm graph and id list differ in size"));
    }
    let by_country = meta.rank_within_country(warm_ids);
    let some = |v: Vec<f64>| v.into_iter().map(Some).collect::<Vec<_>>();
    Ok(vec![
        (
            "popularity".into(),
            warm_ids.iter().map(|&g| meta.popularity_rank[g].map(|r| -(r as f64))).collect(),
        ),
        (
            "popularity_by_country".into(),
            warm_ids.iter().map(|g| by_country.get(g).map(|&r| -(r as f64))).collect(),
        ),
        ("in_degree".into(), some(warm_graph.weighted_in_degree())),
        ("betweenness".into(), some(betweenness(warm_graph, lengths))),
        ("pagerank".into(), some(pagerank(warm_graph, PageRankConfig::default())?)),
    ])
}

pub fn mass_correlations(masses: &[f64], measures: &[(String, Vec<Option<f64>>)]) -> Result<CorrelationTable> {
    let mut rows = Vec::with_capacity(measures.len());
    for (name, values) in measures {
        if values.len() != masses.len() {
            return Err(Error::shape(
                "mass_correlations",
                format!("{} masses vs {} values of `{name}`", masses.len(), values.len()),
            ));
        }
        let (m, v): (Vec<f64>, Vec<f64>) = masses
            .iter()
            .zip(values)
            .filter_map(|(&m, v)| v.map(|v| (m, v)))
            .unzip();
        rows.push(CorrelationRow {
            measure: name.clone(),
            nodes: m.len(),
            pearson: pearson(&m, &v),
            spearman: spearman(&m, &v),
        });
    }
    Ok(CorrelationTable { rows })
}

/// Linear-interpolation quartiles `(q1, median, q3)` of a nonempty sample.
pub fn quartiles(values: &[f64]) -> Option<[f64; 3]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some([q(0.25), q(0.5), q(0.75)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasProfile {
    /// Per query: the best (smallest) popularity rank among its top entries,
    /// `None` when none of them has a rank.
    pub values: Vec<(NodeId, Option<u32>)>,
    pub quartiles: Option<[f64; 3]>,
}

/// For each list, the popularity rank of the most popular item among its
/// first `top` entries.
pub fn popularity_bias_profile(lists: &[RankedList], meta: &NodeMeta, top: usize) -> BiasProfile {
    let values: Vec<(NodeId, Option<u32>)> = lists
        .iter()
        .map(|l| {
            let best = l.entries.iter().take(top).filter_map(|e| meta.popularity_rank[e.candidate]).min();
            (l.query, best)
        })
        .collect();
    let defined: Vec<f64> = values.iter().filter_map(|(_, v)| v.map(f64::from)).collect();
    BiasProfile {
        quartiles: quartiles(&defined),
        values,
    }
}

/// `query_id<TAB>min_popularity_rank`, with a config-hash comment line.
pub fn write_profile_tsv(path: &Path, profile: &BiasProfile, ids: &[String], config_hash: &str) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "# config_hash={config_hash}").map_err(io)?;
    for (q, v) in &profile.values {
        let v = v.map_or("NA".to_string(), |r| r.to_string());
        writeln!(w, "{}\t{v}", ids[*q]).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coldstart::RankedEntry;
    use crate::numerics::seeded_rng;
    use rand::Rng as _;

    #[test]
    fn perfect_correlation() {
        let ranks = [3.0, 1.0, 2.0, 5.0, 4.0];
        let reversed: Vec<f64> = ranks.iter().map(|r| -r).collect();
        let masses = reversed.clone();
        assert!((pearson(&masses, &reversed).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&masses, &reversed).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&masses, &ranks).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(spearman(&[1.0, 2.0], &[4.0, 4.0]), None);
        assert_eq!(pearson(&[1.0], &[2.0]), None);
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(fractional_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn independent_vectors_are_uncorrelated() {
        let mut rng = seeded_rng(99);
        let a: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random()).collect();
        assert!(pearson(&a, &b).unwrap().abs() < 0.1);
        assert!(spearman(&a, &b).unwrap().abs() < 0.1);
    }

    #[test]
    fn quartiles_interpolate() {
        assert_eq!(quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]), Some([2.0, 3.0, 4.0]));
        assert_eq!(quartiles(&[4.0, 1.0]), Some([1.75, 2.5, 3.25]));
        assert_eq!(quartiles(&[]), None);
    }

    fn list(query: NodeId, ids: &[NodeId]) -> RankedList {
        RankedList::top_k(
            query,
            ids.iter().enumerate().map(|(r, &c)| RankedEntry {
                candidate: c,
                score: 0.0,
                key: -(r as f64),
            }),
            ids.len(),
        )
    }

    #[test]
    fn bias_profile_takes_best_rank() {
        let meta = NodeMeta {
            popularity_rank: vec![Some(1), Some(4), Some(2), None, Some(3)],
            country: vec![None; 5],
        };
        let lists = vec![list(3, &[1, 0, 2]), list(3, &[4, 1]), list(0, &[3])];
        let p = popularity_bias_profile(&lists, &meta, 20);
        assert_eq!(p.values, vec![(3, Some(1)), (3, Some(3)), (0, None)]);
        assert_eq!(p.quartiles.unwrap()[1], 2.0);
        assert_eq!(popularity_bias_profile(&lists, &meta, 1).values[0], (3, Some(4)));
    }

    #[test]
    fn measures_are_aligned() {
        let g = DirectedWeightedGraph::from_edges(3, [(0, 1, 0.5), (2, 1, 1.0), (1, 0, 0.3)]).unwrap();
        let meta = NodeMeta {
            popularity_rank: vec![Some(2), Some(1), Some(3), Some(4)],
            country: vec![Some("a".into()), Some("b".into()), Some("a".into()), None],
        };
        let m = node_measures(&g, &[0, 1, 2], &meta, PathLength::InverseWeight).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m[0].1, vec![Some(-2.0), Some(-1.0), Some(-3.0)]);
        assert_eq!(m[1].1, vec![Some(-1.0), Some(-1.0), Some(-2.0)]);
        let masses = [0.1, 0.9, -0.2];
        let t = mass_correlations(&masses, &m).unwrap();
        for r in &t.rows {
            for v in [r.pearson, r.spearman].into_iter().flatten() {
                assert!((-1.0..=1.0).contains(&v));
            }
        }
        assert!(t.to_tsv().lines().count() == 6);
    }
}
