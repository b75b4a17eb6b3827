//! GCN encoders, gravity / inner-product / source-target decoders, the
//! weighted cross-entropy and KL losses, full-batch training, and
//! checkpoints.

mod checkpoint;
mod decoder;
mod encoder;
mod loss;
mod train;

pub use checkpoint::Checkpoint;
pub use decoder::{
    decode_gravity, decode_inner, decode_source_target, reconstruction_loss_and_grad, sigmoid,
    softplus, ReconstructionTargets,
};
pub use encoder::{encode_gcn, EncoderCache, EncoderInputs};
pub use loss::{kl_grad, loss_kl, loss_weighted_bce, sample_latent};
pub use train::{train, LossParts, ModelProblem, TrainData, TrainOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Edge decoder. All three map a pair of embedding rows to a logit; the
/// edge probability is its sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderKind {
    /// `σ(m̃_j − λ·log max(‖z_i − z_j‖², ε))`; the last column is the mass.
    Gravity { lambda: f64, eps_dist: f64 },
    /// `σ(z_iᵀ z_j)`
    InnerProduct,
    /// `σ(⟨source half of z_i, target half of z_j⟩)`
    SourceTarget,
}

impl DecoderKind {
    pub fn gravity(lambda: f64) -> Self {
        DecoderKind::Gravity {
            lambda,
            eps_dist: DEFAULT_EPS_DIST,
        }
    }

    pub fn is_gravity(&self) -> bool {
        matches!(self, DecoderKind::Gravity { .. })
    }

    /// Encoder output width for a `dim`-dimensional embedding.
    pub fn output_dim(&self, dim: usize) -> usize {
        match self {
            DecoderKind::Gravity { .. } => dim + 1,
            _ => dim,
        }
    }

    pub fn validate(&self, output_dim: usize) -> Result<()> {
        match *self {
            DecoderKind::Gravity { lambda, eps_dist } => {
                if !(lambda >= 0.0) || !lambda.is_finite() {
                    return Err(Error::Invalid(format!("lambda must be >= 0, got {lambda}")));
                }
                if !(eps_dist > 0.0) {
                    return Err(Error::Invalid(format!("eps_dist must be > 0, got {eps_dist}")));
                }
                if output_dim < 2 {
                    return Err(Error::Invalid("gravity embeddings need at least 2 columns".into()));
                }
            }
            DecoderKind::SourceTarget if output_dim % 2 != 0 => {
                return Err(Error::Invalid(format!(
                    "source-target decoding needs an even dimension, got {output_dim}"
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Pre-activation score of the edge `i → j` between two raw rows.
    #[inline]
    pub fn logit(&self, zi: &[f64], zj: &[f64]) -> f64 {
        match *self {
            DecoderKind::Gravity { lambda, eps_dist } => {
                let d = zi.len() - 1;
                let r = crate::numerics::sq_dist(&zi[..d], &zj[..d]);
                zj[d] - lambda * r.max(eps_dist).ln()
            }
            DecoderKind::InnerProduct => crate::numerics::dot(zi, zj),
            DecoderKind::SourceTarget => {
                let h = zi.len() / 2;
                crate::numerics::dot(&zi[..h], &zj[h..])
            }
        }
    }
}

pub const DEFAULT_EPS_DIST: f64 = 1e-10;

/// Autoencoder families compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GravityAe,
    GravityVae,
    StandardAe,
    StandardVae,
    SourceTargetAe,
    SourceTargetVae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::GravityAe,
        ModelKind::GravityVae,
        ModelKind::StandardAe,
        ModelKind::StandardVae,
        ModelKind::SourceTargetAe,
        ModelKind::SourceTargetVae,
    ];

    pub fn variational(self) -> bool {
        matches!(
            self,
            ModelKind::GravityVae | ModelKind::StandardVae | ModelKind::SourceTargetVae
        )
    }

    pub fn decoder(self, lambda: f64, eps_dist: f64) -> DecoderKind {
        match self {
            ModelKind::GravityAe | ModelKind::GravityVae => DecoderKind::Gravity { lambda, eps_dist },
            ModelKind::StandardAe | ModelKind::StandardVae => DecoderKind::InnerProduct,
            ModelKind::SourceTargetAe | ModelKind::SourceTargetVae => DecoderKind::SourceTarget,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GravityAe => "gravity_ae",
            ModelKind::GravityVae => "gravity_vae",
            ModelKind::StandardAe => "standard_ae",
            ModelKind::StandardVae => "standard_vae",
            ModelKind::SourceTargetAe => "source_target_ae",
            ModelKind::SourceTargetVae => "source_target_vae",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown model `{s}`")))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F64,
    /// Parameters and encoder outputs are rounded to single precision.
    F32,
}

/// Node measure substituted for the learned mass in the fixed-mass ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedMassSource {
    Popularity,
    InDegree,
    Pagerank,
}

impl std::str::FromStr for FixedMassSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "popularity" => Ok(FixedMassSource::Popularity),
            "in_degree" => Ok(FixedMassSource::InDegree),
            "pagerank" => Ok(FixedMassSource::Pagerank),
            other => Err(Error::Invalid(format!("unknown fixed-mass source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub eps_dist: f64,
    /// Use `lambda` in the training decoder; otherwise train with λ = 1.
    pub lambda_in_training: bool,
    pub variational: bool,
    pub seed: u64,
    pub precision: Precision,
    pub fixed_mass: Option<FixedMassSource>,
    /// Guard against accidental O(n²) blowups.
    pub max_nodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            hidden: 64,
            epochs: 300,
            lr: 0.05,
            lambda: 5.0,
            eps_dist: DEFAULT_EPS_DIST,
            lambda_in_training: true,
            variational: false,
            seed: 0,
            precision: Precision::F64,
            fixed_mass: None,
            max_nodes: 30_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, decoder: &DecoderKind) -> Result<()> {
        if self.epochs == 0 || self.hidden == 0 || self.dim == 0 {
            return Err(Error::Invalid("epochs, hidden and dim must all be >= 1".into()));
        }
        if !(self.lr >= 0.0) {
            return Err(Error::Invalid(format!("learning rate {} must be >= 0", self.lr)));
        }
        if self.fixed_mass.is_some() && !decoder.is_gravity() {
            return Err(Error::Invalid("fixed masses require a gravity decoder".into()));
        }
        decoder.validate(decoder.output_dim(self.dim))
    }
}

/// Encoder weights. For variational models `w0`/`w1` produce the means and
/// `sigma` the log standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub w0: DenseMatrix,
    pub w1: DenseMatrix,
    pub sigma: Option<(DenseMatrix, DenseMatrix)>,
}

impl GcnParams {
    pub fn from_blocks(mut blocks: Vec<DenseMatrix>) -> Result<Self> {
        match blocks.len() {
            2 => {
                let w1 = blocks.pop().unwrap();
                let w0 = blocks.pop().unwrap();
                Ok(Self { w0, w1, sigma: None })
            }
            4 => {
                let s1 = blocks.pop().unwrap();
                let s0 = blocks.pop().unwrap();
                let w1 = blocks.pop().unwrap();
                let w0 = blocks.pop().unwrap();
                Ok(Self {
                    w0,
                    w1,
                    sigma: Some((s0, s1)),
                })
            }
            k => Err(Error::Invalid(format!("expected 2 or 4 weight blocks, got {k}"))),
        }
    }

    pub fn block_names(variational: bool) -> &'static [&'static str] {
        if variational {
            &["W0_mu", "W1_mu", "W0_sigma", "W1_sigma"]
        } else {
            &["W0", "W1"]
        }
    }

    pub fn blocks(&self) -> Vec<&DenseMatrix> {
        let mut v = vec![&self.w0, &self.w1];
        if let Some((a, b)) = &self.sigma {
            v.push(a);
            v.push(b);
        }
        v
    }

    pub fn into_blocks(self) -> Vec<DenseMatrix> {
        let mut v = vec![self.w0, self.w1];
        if let Some((a, b)) = self.sigma {
            v.push(a);
            v.push(b);
        }
        v
    }

    pub fn is_variational(&self) -> bool {
        self.sigma.is_some()
    }

    pub fn input_dim(&self) -> usize {
        self.w0.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w1.cols()
    }
}

/// Positions and masses split out of a gravity encoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityEmbedding {
    pub positions: DenseMatrix,
    pub masses: Vec<f64>,
}

impl GravityEmbedding {
    /// First `d` columns are positions, the last column is the mass.
    pub fn split(raw: &DenseMatrix) -> Result<Self> {
        if raw.cols() <= 1 {
            return Err(Error::shape(
                "split_embedding",
                format!("need at least 2 columns, got {}", raw.cols()),
            ));
        }
        let d = raw.cols() - 1;
        Ok(Self {
            positions: raw.column_range(0, d),
            masses: raw.column(d),
        })
    }

    pub fn assemble(&self) -> DenseMatrix {
        let d = self.positions.cols();
        DenseMatrix::from_fn(self.positions.rows(), d + 1, |i, j| {
            if j < d {
                self.positions.get(i, j)
            } else {
                self.masses[i]
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.positions.cols()
    }
}

/// Raw encoder output rows together with the decoder that reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub raw: DenseMatrix,
    pub decoder: DecoderKind,
}

impl Embedding {
    pub fn new(raw: DenseMatrix, decoder: DecoderKind) -> Result<Self> {
        decoder.validate(raw.cols())?;
        Ok(Self { raw, decoder })
    }

    pub fn rows(&self) -> usize {
        self.raw.rows()
    }

    #[inline]
    pub fn logit(&self, i: usize, j: usize) -> f64 {
        self.decoder.logit(self.raw.row(i), self.raw.row(j))
    }

    #[inline]
    pub fn score(&self, i: usize, j: usize) -> f64 {
        sigmoid(self.logit(i, j))
    }

    pub fn gravity(&self) -> Option<GravityEmbedding> {
        self.decoder
            .is_gravity()
            .then(|| GravityEmbedding::split(&self.raw).expect("validated width"))
    }

    pub fn with_decoder(&self, decoder: DecoderKind) -> Result<Self> {
        Self::new(self.raw.clone(), decoder)
    }
}

/// Per-epoch loss values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossTrace {
    pub total: Vec<f64>,
    pub reconstruction: Vec<f64>,
    /// Empty for non-variational models.
    pub kl: Vec<f64>,
}

impl LossTrace {
    pub fn len(&self) -> usize {
        self.total.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty()
    }
}
