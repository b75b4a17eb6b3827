//! Projection of attribute-only nodes into a trained embedding, and top-K
//! ranking of candidates for each query.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{extend_with_cold, AttributeTable, MaskedGraphView, NodeId};
use crate::models::{sigmoid, Checkpoint, Embedding, EncoderInputs, GcnParams, Precision};
use crate::numerics::{seeded_rng, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedEntry {
    pub candidate: NodeId,
    /// Reported score (an edge probability for the autoencoders).
    pub score: f64,
    /// Sort key. Equals the logit for the autoencoders, so that ordering
    /// survives where the sigmoid rounds to 1.
    pub key: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub query: NodeId,
    pub entries: Vec<RankedEntry>,
    /// Fewer candidates than requested.
    pub short: bool,
    /// A filtered baseline fell back to its unfiltered list.
    pub fallback: bool,
}

impl RankedList {
    /// Top `k` of `candidates` by descending key, ties by ascending id. The
    /// query itself is never included.
    pub fn top_k(query: NodeId, candidates: impl IntoIterator<Item = RankedEntry>, k: usize) -> Self {
        let mut all: Vec<RankedEntry> = candidates.into_iter().filter(|e| e.candidate != query).collect();
        let short = k > all.len();
        if !short && k < all.len() {
            if k > 0 {
                all.select_nth_unstable_by(k - 1, entry_order);
            }
            all.truncate(k);
        }
        all.sort_unstable_by(entry_order);
        Self {
            query,
            entries: all,
            short,
            fallback: false,
        }
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.entries.iter().map(|e| e.candidate).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn entry_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.key.total_cmp(&a.key).then(a.candidate.cmp(&b.candidate))
}

/// How a variational encoder is read out for projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Mean,
    /// One reparameterized draw from the seeded generator.
    Sample { seed: u64 },
}

/// Which nodes may appear in a ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidatePolicy {
    /// Warm nodes and every projected cold node, minus the query.
    #[default]
    All,
    WarmOnly,
}

impl std::str::FromStr for CandidatePolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CandidatePolicy::All),
            "warm-only" | "warm_only" => Ok(CandidatePolicy::WarmOnly),
            other => Err(Error::Invalid(format!("unknown candidate policy `{other}`"))),
        }
    }
}

impl std::fmt::Display for CandidatePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CandidatePolicy::All => "all",
            CandidatePolicy::WarmOnly => "warm-only",
        })
    }
}

/// Encoder outputs for `cold_ids`, appended to the warm graph as isolated
/// nodes, in `cold_ids` order.
pub fn project(
    params: &GcnParams,
    masked: &MaskedGraphView,
    attrs: &AttributeTable,
    cold_ids: &[NodeId],
    readout: Readout,
) -> Result<DenseMatrix> {
    if attrs.dim() != params.input_dim() {
        return Err(Error::shape(
            "project",
            format!("{} attribute columns vs W0 with {} rows", attrs.dim(), params.input_dim()),
        ));
    }
    if cold_ids.is_empty() {
        return Ok(DenseMatrix::zeros(0, params.output_dim()));
    }
    let ext = extend_with_cold(masked, attrs, cold_ids)?;
    let warm_count = ext.warm_count();
    let inputs = EncoderInputs::new(ext.adjacency, &ext.features)?;
    let (mu, _) = inputs.forward(&params.w0, &params.w1)?;
    let rows: Vec<usize> = (warm_count..warm_count + cold_ids.len()).collect();
    let mu = mu.select_rows(&rows);
    match (readout, &params.sigma) {
        (Readout::Sample { seed }, Some((s0, s1))) => {
            let (ls, _) = inputs.forward(s0, s1)?;
            let ls = ls.select_rows(&rows);
            crate::models::sample_latent(&mu, &ls, &mut seeded_rng(seed))
        }
        _ => Ok(mu),
    }
}

/// Embedding rows for warm and projected cold nodes, addressable by node id.
#[derive(Debug, Clone)]
pub struct CatalogEmbedding {
    pub embedding: Embedding,
    /// Row → node id; warm rows first.
    pub index_map: Vec<NodeId>,
    warm_count: usize,
    row_of: HashMap<NodeId, usize>,
}

impl CatalogEmbedding {
    pub fn new(warm: Embedding, warm_ids: &[NodeId], cold: DenseMatrix, cold_ids: &[NodeId]) -> Result<Self> {
        if warm.rows() != warm_ids.len() || cold.rows() != cold_ids.len() {
            return Err(Error::shape("catalog", "row counts do not match id lists"));
        }
        let raw = if cold.rows() == 0 {
            warm.raw.clone()
        } else {
            warm.raw.vstack(&cold)?
        };
        let embedding = Embedding::new(raw, warm.decoder)?;
        let index_map: Vec<NodeId> = warm_ids.iter().chain(cold_ids).copied().collect();
        let mut row_of = HashMap::with_capacity(index_map.len());
        for (r, &id) in index_map.iter().enumerate() {
            if row_of.insert(id, r).is_some() {
                return Err(Error::Invalid(format!("node {id} embedded twice")));
            }
        }
        Ok(Self {
            embedding,
            index_map,
            warm_count: warm_ids.len(),
            row_of,
        })
    }

    /// Warm rows from the checkpoint plus `cold_ids` projected with the
    /// mean readout. With fixed masses, cold nodes get the standardized
    /// mean mass 0.
    pub fn from_checkpoint(
        ck: &Checkpoint,
        masked: &MaskedGraphView,
        attrs: &AttributeTable,
        cold_ids: &[NodeId],
    ) -> Result<Self> {
        if ck.warm_ids != masked.warm_ids {
            return Err(Error::Invalid("checkpoint was trained on a different warm set".into()));
        }
        let mut cold = project(&ck.params, masked, attrs, cold_ids, Readout::Mean)?;
        if ck.config.precision == Precision::F32 {
            for v in cold.as_mut_slice() {
                *v = *v as f32 as f64;
            }
        }
        if ck.fixed_mass.is_some() {
            let d = cold.cols() - 1;
            for i in 0..cold.rows() {
                cold.set(i, d, 0.0);
            }
        }
        Self::new(ck.warm_embedding()?, &ck.warm_ids, cold, cold_ids)
    }

    pub fn row(&self, id: NodeId) -> Option<usize> {
        self.row_of.get(&id).copied()
    }

    pub fn warm_ids(&self) -> &[NodeId] {
        &self.index_map[..self.warm_count]
    }

    pub fn candidates(&self, policy: CandidatePolicy) -> &[NodeId] {
        match policy {
            CandidatePolicy::All => &self.index_map,
            CandidatePolicy::WarmOnly => self.warm_ids(),
        }
    }

    fn entry(&self, q: usize, id: NodeId) -> Result<RankedEntry> {
        let c = self.row(id).ok_or_else(|| Error::Invalid(format!("candidate {id} not embedded")))?;
        let key = self.embedding.logit(q, c);
        Ok(RankedEntry {
            candidate: id,
            score: sigmoid(key),
            key,
        })
    }

    fn query_row(&self, query: NodeId) -> Result<usize> {
        self.row(query).ok_or_else(|| Error::Invalid(format!("query {query} not embedded")))
    }

    /// Edge probability `query → c` for every candidate, in input order.
    pub fn score_all(&self, query: NodeId, candidates: &[NodeId]) -> Result<Vec<f64>> {
        let q = self.query_row(query)?;
        candidates.iter().map(|&c| self.entry(q, c).map(|e| e.score)).collect()
    }

    pub fn rank_top_k(&self, query: NodeId, candidates: &[NodeId], k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::Invalid("K must be >= 1".into()));
        }
        let q = self.query_row(query)?;
        let entries = candidates
            .iter()
            .filter(|&&c| c != query)
            .map(|&c| self.entry(q, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::top_k(query, entries, k))
    }

    /// [`Self::rank_top_k`] for many queries, in parallel, in query order.
    pub fn rank_queries(&self, queries: &[NodeId], policy: CandidatePolicy, k: usize) -> Result<Vec<RankedList>> {
        let candidates = self.candidates(policy);
        queries.par_iter().map(|&q| self.rank_top_k(q, candidates, k)).collect()
    }
}

/// `query_id<TAB>rank<TAB>candidate_id<TAB>score`, ranks from 1, preceded by
/// a comment line carrying the config hash.
pub fn write_ranked_tsv(path: &Path, lists: &[RankedList], ids: &[String], config_hash: &str) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(w, "# config_hash={config_hash}").map_err(io)?;
    for list in lists {
        for (r, e) in list.entries.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}\t{}", ids[list.query], r + 1, ids[e.candidate], e.score).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
