//! Planted test graphs: items in genre clusters with a country and a
//! popularity, whose out-edges go to the top-k items by attribute proximity
//! plus a popularity bonus. The structure is recoverable from attributes,
//! which makes these graphs useful for smoke tests and the bundled sample.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{AttributeTable, Dataset, DirectedWeightedGraph, NodeMeta};
use crate::numerics::{seeded_rng, sq_dist, DenseMatrix};

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub nodes: usize,
    /// Out-edges per node.
    pub k: usize,
    pub genres: usize,
    pub countries: usize,
    /// Width of the continuous, cluster-centred part of each attribute row.
    pub latent_dim: usize,
    /// Standard deviation around the genre centroid.
    pub noise: f64,
    /// Weight of log-popularity in the edge score.
    pub popularity_weight: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            nodes: 200,
            k: 5,
            genres: 4,
            countries: 3,
            latent_dim: 8,
            noise: 0.5,
            popularity_weight: 1.0,
            seed: 0,
        }
    }
}

/// Attribute rows are `[one-hot genre | one-hot country | centroid + noise]`.
/// Edge scores are `−‖x_i − x_j‖² + popularity_weight · ln p_j`; each node
/// links to its top `k`, with weight `exp(score − best score)` in `(0, 1]`.
pub fn planted_dataset(config: &PlantedConfig) -> Result<Dataset> {
    let n = config.nodes;
    if n < 2 || config.k == 0 || config.k >= n || config.genres == 0 || config.countries == 0 {
        return Err(Error::Invalid(
            "planted graph needs nodes >= 2, 1 <= k < nodes, genres and countries >= 1".into(),
        ));
    }
    let mut rng = seeded_rng(config.seed);
    let centroids = DenseMatrix::from_fn(config.genres, config.latent_dim, |_, _| StandardNormal.sample(&mut rng));
    let width = config.genres + config.countries + config.latent_dim;
    let mut x = DenseMatrix::zeros(n, width);
    let mut log_pop = vec![0.0f64; n];
    let mut country = Vec::with_capacity(n);
    for i in 0..n {
        let g = rng.random_range(0..config.genres);
        let c = rng.random_range(0..config.countries);
        let row = x.row_mut(i);
        row[g] = 1.0;
        row[config.genres + c] = 1.0;
        for d in 0..config.latent_dim {
            let e: f64 = StandardNormal.sample(&mut rng);
            row[config.genres + config.countries + d] = centroids.get(g, d) + config.noise * e;
        }
        log_pop[i] = StandardNormal.sample(&mut rng);
        country.push(Some(format!("c{c}")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| log_pop[b].total_cmp(&log_pop[a]).then(a.cmp(&b)));
    let mut rank = vec![None; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = Some(r as u32 + 1);
    }

    let mut edges = Vec::with_capacity(n * config.k);
    for i in 0..n {
        let mut scored: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (-sq_dist(x.row(i), x.row(j)) + config.popularity_weight * log_pop[j], j))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let best = scored[0].0;
        for &(s, j) in scored.iter().take(config.k) {
            edges.push((i, j, (s - best).exp()));
        }
    }

    let ids = (0..n).map(|i| format!("item{i:04}")).collect();
    Dataset::new(
        ids,
        DirectedWeightedGraph::from_edges(n, edges)?,
        AttributeTable::new(x)?,
        NodeMeta {
            popularity_rank: rank,
            country,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_weights() {
        let ds = planted_dataset(&PlantedConfig::default()).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.graph.edge_count(), 1000);
        assert_eq!(ds.attrs.dim(), 15);
        for i in 0..200 {
            let out = ds.graph.out_edges(i);
            assert_eq!(out.len(), 5);
            assert!(out.iter().any(|e| e.1 == 1.0));
            assert!(out.iter().all(|e| e.1 > 0.0 && e.1 <= 1.0));
        }
        let mut ranks: Vec<u32> = ds.meta.popularity_rank.iter().map(|r| r.unwrap()).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, (1..=200).collect::<Vec<_>>());
    }

    #[test]
    fn seeded() {
        let a = planted_dataset(&PlantedConfig { nodes: 50, ..PlantedConfig::default() }).unwrap();
        let b = planted_dataset(&PlantedConfig { nodes: 50, ..PlantedConfig::default() }).unwrap();
        assert_eq!(a, b);
        let c = planted_dataset(&PlantedConfig { nodes: 50, seed: 1, ..PlantedConfig::default() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(planted_dataset(&PlantedConfig { nodes: 5, k: 5, ..PlantedConfig::default() }).is_err());
    }
}
