use crate::error::{Error, Result};
use crate::eval::{pagerank, PageRankConfig};
use crate::graph::{normalize_out_degree, AttributeTable, DirectedWeightedGraph, MaskedGraphView, NodeId, NodeMeta};
use crate::numerics::{glorot_init, seeded_rng, Adam, AdamConfig, DenseMatrix};

use super::decoder::{reconstruction_loss_and_grad, ReconstructionTargets};
use super::encoder::EncoderInputs;
use super::loss::{kl_grad, loss_kl, reparameterize, standard_normal};
use super::{DecoderKind, Embedding, FixedMassSource, GcnParams, LossTrace, Precision, TrainConfig};

pub struct TrainData<'a> {
    pub masked: &'a MaskedGraphView,
    pub attrs: &'a AttributeTable,
    /// Needed only for popularity-based fixed masses.
    pub meta: Option<&'a NodeMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: GcnParams,
    /// Warm nodes in `warm_ids` order, decoded with the inference decoder.
    pub embedding: Embedding,
    pub warm_ids: Vec<NodeId>,
    pub trace: LossTrace,
    /// Standardized measure used in place of the mass column, warm order.
    pub fixed_mass: Option<Vec<f64>>,
}

/// Encoder inputs, reconstruction targets, and decoder for one graph: the
/// full differentiable objective minus the parameters.
pub struct ModelProblem {
    inputs: EncoderInputs,
    targets: ReconstructionTargets,
    decoder: DecoderKind,
    variational: bool,
    fixed_mass: Option<Vec<f64>>,
}

impl ModelProblem {
    pub fn new(
        graph: &DirectedWeightedGraph,
        features: &DenseMatrix,
        decoder: DecoderKind,
        variational: bool,
        fixed_mass: Option<Vec<f64>>,
    ) -> Result<Self> {
        if features.rows() != graph.node_count() {
            return Err(Error::shape(
                "train",
                format!("{} feature rows for {} nodes", features.rows(), graph.node_count()),
            ));
        }
        if let Some(m) = &fixed_mass {
            if m.len() != graph.node_count() || !decoder.is_gravity() {
                return Err(Error::Invalid("fixed masses need one value per node and a gravity decoder".into()));
            }
        }
        Ok(Self {
            inputs: EncoderInputs::new(normalize_out_degree(graph, 0), features)?,
            targets: ReconstructionTargets::new(graph.to_sparse())?,
            decoder,
            variational,
            fixed_mass,
        })
    }

    pub fn node_count(&self) -> usize {
        self.inputs.node_count()
    }

    pub fn decoder(&self) -> DecoderKind {
        self.decoder
    }

    /// Glorot-initialized weight blocks in training order.
    pub fn init_params(&self, hidden: usize, out: usize, rng: &mut crate::numerics::Rng) -> Vec<DenseMatrix> {
        let f = self.inputs.feature_dim();
        let mut blocks = vec![glorot_init(f, hidden, rng), glorot_init(hidden, out, rng)];
        if self.variational {
            blocks.push(glorot_init(f, hidden, rng));
            blocks.push(glorot_init(hidden, out, rng));
        }
        blocks
    }

    fn apply_fixed_mass(&self, z: &mut DenseMatrix) {
        if let Some(m) = &self.fixed_mass {
            let d = z.cols() - 1;
            for (i, &v) in m.iter().enumerate() {
                z.set(i, d, v);
            }
        }
    }

    /// Deterministic embedding: the AE output, or the mean for VAEs.
    pub fn embed(&self, params: &[DenseMatrix]) -> Result<DenseMatrix> {
        let (mut z, _) = self.inputs.forward(&params[0], &params[1])?;
        self.apply_fixed_mass(&mut z);
        Ok(z)
    }

    /// Loss and gradients for `params` (`[W0, W1]` or
    /// `[W0_mu, W1_mu, W0_sigma, W1_sigma]`). Variational models need the
    /// reparameterization noise.
    pub fn loss_and_grad(
        &self,
        params: &[DenseMatrix],
        noise: Option<&DenseMatrix>,
    ) -> Result<(LossParts, Vec<DenseMatrix>)> {
        let expected = if self.variational { 4 } else { 2 };
        if params.len() != expected {
            return Err(Error::Invalid(format!(
                "expected {expected} parameter blocks, got {}",
                params.len()
            )));
        }
        let (mu, cache_mu) = self.inputs.forward(&params[0], &params[1])?;
        if !self.variational {
            let mut z = mu;
            self.apply_fixed_mass(&mut z);
            let (recon, mut grad_z) = reconstruction_loss_and_grad(&z, &self.targets, &self.decoder)?;
            self.mask_mass_grad(&mut grad_z);
            let (g0, g1) = self.inputs.backward(&params[1], &cache_mu, &grad_z)?;
            return Ok((
                LossParts {
                    total: recon,
                    reconstruction: recon,
                    kl: 0.0,
                },
                vec![g0, g1],
            ));
        }

        let noise = noise.ok_or_else(|| Error::Invalid("variational loss needs noise".into()))?;
        let (log_sigma, cache_sigma) = self.inputs.forward(&params[2], &params[3])?;
        let mut z = reparameterize(&mu, &log_sigma, noise)?;
        self.apply_fixed_mass(&mut z);
        let (recon, mut grad_z) = reconstruction_loss_and_grad(&z, &self.targets, &self.decoder)?;
        self.mask_mass_grad(&mut grad_z);
        let kl = loss_kl(&mu, &log_sigma)?;
        let (kl_mu, kl_sigma) = kl_grad(&mu, &log_sigma);

        let mut grad_mu = grad_z.clone();
        for (g, k) in grad_mu.as_mut_slice().iter_mut().zip(kl_mu.as_slice()) {
            *g += k;
        }
        let mut grad_sigma = kl_sigma;
        for (k, ((&gz, &ls), &e)) in grad_sigma.as_mut_slice().iter_mut().zip(
            grad_z
                .as_slice()
                .iter()
                .zip(log_sigma.as_slice())
                .zip(noise.as_slice()),
        ) {
            *k += gz * ls.exp() * e;
        }
        let (g0, g1) = self.inputs.backward(&params[1], &cache_mu, &grad_mu)?;
        let (g2, g3) = self.inputs.backward(&params[3], &cache_sigma, &grad_sigma)?;
        Ok((
            LossParts {
                total: recon + kl,
                reconstruction: recon,
                kl,
            },
            vec![g0, g1, g2, g3],
        ))
    }

    fn mask_mass_grad(&self, grad: &mut DenseMatrix) {
        if self.fixed_mass.is_some() {
            let d = grad.cols() - 1;
            for i in 0..grad.rows() {
                grad.set(i, d, 0.0);
            }
        }
    }
}

/// Zero-mean, unit-variance rescaling; constant inputs map to zeros.
pub(crate) fn standardize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return vec![0.0; values.len()];
    }
    let sd = var.sqrt();
    values.iter().map(|v| (v - mean) / sd).collect()
}

fn fixed_mass_values(
    source: FixedMassSource,
    warm_graph: &DirectedWeightedGraph,
    warm_ids: &[NodeId],
    meta: Option<&NodeMeta>,
) -> Result<Vec<f64>> {
    let raw = match source {
        FixedMassSource::Popularity => {
            let meta = meta.ok_or_else(|| Error::Invalid("popularity masses need node metadata".into()))?;
            warm_ids
                .iter()
                .map(|&g| {
                    meta.popularity_rank[g]
                        .map(|r| -(r as f64))
                        .ok_or_else(|| Error::Invalid(format!("node {g} has no popularity rank")))
                })
                .collect::<Result<Vec<_>>>()?
        }
        FixedMassSource::InDegree => warm_graph.weighted_in_degree(),
        FixedMassSource::Pagerank => pagerank(warm_graph, PageRankConfig::default())?,
    };
    Ok(standardize(&raw))
}

#[inline]
fn round_f32(m: &mut DenseMatrix) {
    for v in m.as_mut_slice() {
        *v = *v as f32 as f64;
    }
}

/// Full-batch training on the warm subgraph.
///
/// `decoder` is the inference decoder; unless `lambda_in_training` is set,
/// gravity models are trained with λ = 1.
pub fn train(data: &TrainData<'_>, decoder: DecoderKind, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate(&decoder)?;
    let warm_ids = data.masked.warm_ids.clone();
    if warm_ids.is_empty() {
        return Err(Error::Invalid("no warm nodes to train on".into()));
    }
    if warm_ids.len() > config.max_nodes {
        return Err(Error::Invalid(format!(
            "{} warm nodes exceed max_nodes = {}; dense decoding is O(n²)",
            warm_ids.len(),
            config.max_nodes
        )));
    }
    let warm_graph = data.masked.warm_subgraph();
    let features = data.attrs.select(&warm_ids);

    let train_decoder = match decoder {
        DecoderKind::Gravity { eps_dist, .. } if !config.lambda_in_training => {
            DecoderKind::Gravity { lambda: 1.0, eps_dist }
        }
        d => d,
    };
    let fixed_mass = config
        .fixed_mass
        .map(|src| fixed_mass_values(src, &warm_graph, &warm_ids, data.meta))
        .transpose()?;
    let problem = ModelProblem::new(&warm_graph, &features, train_decoder, config.variational, fixed_mass.clone())?;

    let out_dim = decoder.output_dim(config.dim);
    let mut rng = seeded_rng(config.seed);
    let mut params = problem.init_params(config.hidden, out_dim, &mut rng);
    let f32_mode = config.precision == Precision::F32;
    if f32_mode {
        params.iter_mut().for_each(round_f32);
    }
    let names = GcnParams::block_names(config.variational);
    let shapes: Vec<(&str, (usize, usize))> = names.iter().zip(&params).map(|(n, p)| (*n, p.shape())).collect();
    let mut adam = Adam::new(AdamConfig::with_lr(config.lr), &shapes);

    let n = problem.node_count();
    let mut trace = LossTrace::default();
    for epoch in 0..config.epochs {
        let noise = config.variational.then(|| standard_normal(n, out_dim, &mut rng));
        let (parts, grads) = problem.loss_and_grad(&params, noise.as_ref())?;
        if !parts.total.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        trace.total.push(parts.total);
        trace.reconstruction.push(parts.reconstruction);
        if config.variational {
            trace.kl.push(parts.kl);
        }
        let grad_refs: Vec<&DenseMatrix> = grads.iter().collect();
        let mut param_refs: Vec<&mut DenseMatrix> = params.iter_mut().collect();
        adam.step(&mut param_refs, &grad_refs)?;
        if f32_mode {
            params.iter_mut().for_each(round_f32);
        }
    }

    let mut raw = problem.embed(&params)?;
    if f32_mode {
        round_f32(&mut raw);
    }
    Ok(TrainOutput {
        params: GcnParams::from_blocks(params)?,
        embedding: Embedding::new(raw, decoder)?,
        warm_ids,
        trace,
        fixed_mass,
    })
}
