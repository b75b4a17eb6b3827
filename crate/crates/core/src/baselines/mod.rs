//! Non-autoencoder rankers: popularity and in-degree lists (optionally
//! restricted to the query's country), attribute k-NN with optional
//! re-ranking, and an SVD embedding regressed from attributes by an MLP.
//!
//! All of them rank warm nodes only.

mod knn;
mod svd_dnn;
mod template;

pub use knn::{knn_list, KnnRanker, Rerank, DEFAULT_POOL};
pub use svd_dnn::{mlp_forward, mlp_loss_and_grad, svd_dnn_train, SvdDnnConfig, SvdDnnModel};
pub use template::{in_degree_list, popularity_list, TemplateRanker};

use rayon::prelude::*;

use crate::coldstart::RankedList;
use crate::error::{Error, Result};
use crate::graph::{AttributeTable, MaskedGraphView, NodeId, NodeMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    Popularity,
    PopularityByCountry,
    InDegree,
    InDegreeByCountry,
    Knn,
    KnnPopularity,
    KnnInDegree,
    SvdDnn,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 8] = [
        BaselineKind::Popularity,
        BaselineKind::PopularityByCountry,
        BaselineKind::InDegree,
        BaselineKind::InDegreeByCountry,
        BaselineKind::Knn,
        BaselineKind::KnnPopularity,
        BaselineKind::KnnInDegree,
        BaselineKind::SvdDnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Popularity => "popularity",
            BaselineKind::PopularityByCountry => "popularity_by_country",
            BaselineKind::InDegree => "in_degree",
            BaselineKind::InDegreeByCountry => "in_degree_by_country",
            BaselineKind::Knn => "knn",
            BaselineKind::KnnPopularity => "knn_popularity",
            BaselineKind::KnnInDegree => "knn_in_degree",
            BaselineKind::SvdDnn => "svd_dnn",
        }
    }

    /// Only the SVD + MLP baseline depends on the seed.
    pub fn is_stochastic(self) -> bool {
        self == BaselineKind::SvdDnn
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown baseline `{s}`")))
    }
}

impl std::fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fitted baseline, ready to rank cold queries.
pub enum BaselineRanker {
    Template { ranker: TemplateRanker, by_country: bool },
    Knn(KnnRanker),
    SvdDnn(Box<SvdDnnModel>),
}

impl BaselineRanker {
    pub fn build(
        kind: BaselineKind,
        masked: &MaskedGraphView,
        attrs: &AttributeTable,
        meta: &NodeMeta,
        svd_config: &SvdDnnConfig,
    ) -> Result<Self> {
        let warm = &masked.warm_ids;
        Ok(match kind {
            BaselineKind::Popularity | BaselineKind::PopularityByCountry => BaselineRanker::Template {
                ranker: TemplateRanker::popularity(meta, warm),
                by_country: kind == BaselineKind::PopularityByCountry,
            },
            BaselineKind::InDegree | BaselineKind::InDegreeByCountry => BaselineRanker::Template {
                ranker: TemplateRanker::in_degree(&masked.train_graph, meta, warm),
                by_country: kind == BaselineKind::InDegreeByCountry,
            },
            BaselineKind::Knn => BaselineRanker::Knn(KnnRanker::new(warm.clone(), Rerank::None, DEFAULT_POOL)),
            BaselineKind::KnnPopularity => BaselineRanker::Knn(
                KnnRanker::new(warm.clone(), Rerank::Popularity, DEFAULT_POOL).with_measure_from(masked, meta),
            ),
            BaselineKind::KnnInDegree => BaselineRanker::Knn(
                KnnRanker::new(warm.clone(), Rerank::InDegree, DEFAULT_POOL).with_measure_from(masked, meta),
            ),
            BaselineKind::SvdDnn => BaselineRanker::SvdDnn(Box::new(svd_dnn_train(masked, attrs, svd_config)?)),
        })
    }

    pub fn rank(&self, attrs: &AttributeTable, meta: &NodeMeta, query: NodeId, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::Invalid("K must be >= 1".into()));
        }
        match self {
            BaselineRanker::Template { ranker, by_country } => {
                let country = if *by_country { Some(meta.country[query].as_deref()) } else { None };
                Ok(ranker.rank(query, country, k))
            }
            BaselineRanker::Knn(r) => r.rank(attrs, query, k),
            BaselineRanker::SvdDnn(m) => m.rank(attrs, query, k),
        }
    }

    pub fn rank_queries(
        &self,
        attrs: &AttributeTable,
        meta: &NodeMeta,
        queries: &[NodeId],
        k: usize,
    ) -> Result<Vec<RankedList>> {
        queries.par_iter().map(|&q| self.rank(attrs, meta, q, k)).collect()
    }
}
