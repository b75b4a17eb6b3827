//! Ranking metrics and aggregated reports, centrality measures, mass
//! correlations, and the popularity-bias profile.

mod analysis;
mod centrality;
mod metrics;
mod report;

pub use analysis::{
    fractional_ranks, mass_correlations, node_measures, pearson, popularity_bias_profile, quartiles,
    spearman, write_profile_tsv, BiasProfile, CorrelationRow, CorrelationTable,
};
pub use centrality::{betweenness, pagerank, PageRankConfig, PathLength};
pub use metrics::{map_at_k, ndcg_at_k, recall_at_k};
pub use report::{evaluate, EvalReport, MetricCell, Stat, DEFAULT_KS};
