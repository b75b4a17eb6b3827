use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::numerics::DenseMatrix;

use super::{DecoderKind, Embedding, GcnParams, LossTrace, ModelKind, TrainConfig, TrainOutput};

const MAGIC: &[u8; 8] = b"GRVRANK\0";
const VERSION: u32 = 1;

/// A trained model: config, weights, the warm embedding, and the loss trace.
///
/// On disk: magic, little-endian `u32` version, `u64` header length, a JSON
/// header, then every matrix as raw little-endian `f64` in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelKind,
    pub config: TrainConfig,
    pub decoder: DecoderKind,
    pub config_hash: String,
    pub params: GcnParams,
    /// Warm node ids; row `k` of `embedding` belongs to `warm_ids[k]`.
    pub warm_ids: Vec<NodeId>,
    pub embedding: DenseMatrix,
    pub fixed_mass: Option<Vec<f64>>,
    pub trace: LossTrace,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelKind,
    config: TrainConfig,
    decoder: DecoderKind,
    config_hash: String,
    warm_ids: Vec<NodeId>,
    blocks: Vec<BlockHeader>,
}

#[derive(Serialize, Deserialize)]
struct BlockHeader {
    name: String,
    rows: usize,
    cols: usize,
}

impl Checkpoint {
    pub fn from_training(model: ModelKind, config: TrainConfig, config_hash: String, out: TrainOutput) -> Self {
        Self {
            model,
            config,
            decoder: out.embedding.decoder,
            config_hash,
            params: out.params,
            warm_ids: out.warm_ids,
            embedding: out.embedding.raw,
            fixed_mass: out.fixed_mass,
            trace: out.trace,
        }
    }

    pub fn warm_embedding(&self) -> Result<Embedding> {
        Embedding::new(self.embedding.clone(), self.decoder)
    }

    fn named_blocks(&self) -> Vec<(String, DenseMatrix)> {
        let names = GcnParams::block_names(self.params.is_variational());
        let mut out: Vec<(String, DenseMatrix)> = names
            .iter()
            .zip(self.params.blocks())
            .map(|(n, b)| (n.to_string(), b.clone()))
            .collect();
        out.push(("embedding".into(), self.embedding.clone()));
        if let Some(m) = &self.fixed_mass {
            out.push(("fixed_mass".into(), column(m)));
        }
        out.push(("trace_total".into(), column(&self.trace.total)));
        out.push(("trace_reconstruction".into(), column(&self.trace.reconstruction)));
        out.push(("trace_kl".into(), column(&self.trace.kl)));
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let blocks = self.named_blocks();
        let header = Header {
            model: self.model,
            config: self.config.clone(),
            decoder: self.decoder,
            config_hash: self.config_hash.clone(),
            warm_ids: self.warm_ids.clone(),
            blocks: blocks
                .iter()
                .map(|(name, m)| BlockHeader {
                    name: name.clone(),
                    rows: m.rows(),
                    cols: m.cols(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut buf = Vec::with_capacity(json.len() + 20);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
        buf.extend_from_slice(&json);
        for (_, m) in &blocks {
            for v in m.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let mut word = [0u8; 4];
        read_exact(&mut r, &mut word)?;
        let version = u32::from_le_bytes(word);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let mut len = [0u8; 8];
        read_exact(&mut r, &mut len)?;
        let len = u64::from_le_bytes(len) as usize;
        if len > r.len() {
            return Err(Error::Checkpoint("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&r[..len]).map_err(|e| Error::Checkpoint(e.to_string()))?;
        r = &r[len..];

        let mut blocks = Vec::with_capacity(header.blocks.len());
        for b in &header.blocks {
            let count = b.rows.checked_mul(b.cols).ok_or_else(|| Error::Checkpoint("block too large".into()))?;
            if count.saturating_mul(8) > r.len() {
                return Err(Error::Checkpoint(format!("truncated block `{}`", b.name)));
            }
            let data = r[..count * 8]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect();
            r = &r[count * 8..];
            blocks.push((b.name.as_str(), DenseMatrix::from_vec(b.rows, b.cols, data)?));
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }

        let mut take = |name: &str| -> Result<DenseMatrix> {
            let pos = blocks
                .iter()
                .position(|(n, _)| *n == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing block `{name}`")))?;
            Ok(blocks.remove(pos).1)
        };
        let names = GcnParams::block_names(header.config.variational);
        let weights = names.iter().map(|n| take(n)).collect::<Result<Vec<_>>>()?;
        let params = GcnParams::from_blocks(weights)?;
        let embedding = take("embedding")?;
        let fixed_mass = if header.config.fixed_mass.is_some() {
            Some(take("fixed_mass")?.into_vec())
        } else {
            None
        };
        let trace = LossTrace {
            total: take("trace_total")?.into_vec(),
            reconstruction: take("trace_reconstruction")?.into_vec(),
            kl: take("trace_kl")?.into_vec(),
        };
        if embedding.rows() != header.warm_ids.len() {
            return Err(Error::Checkpoint(format!(
                "{} embedding rows for {} warm ids",
                embedding.rows(),
                header.warm_ids.len()
            )));
        }
        header.decoder.validate(embedding.cols()).map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self {
            model: header.model,
            config: header.config,
            decoder: header.decoder,
            config_hash: header.config_hash,
            params,
            warm_ids: header.warm_ids,
            embedding,
            fixed_mass,
            trace,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn column(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_vec(v.len(), 1, v.to_vec()).expect("column length")
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::Checkpoint("truncated file".into()))
}
