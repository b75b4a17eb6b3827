use crate::coldstart::{RankedEntry, RankedList};
use crate::error::{Error, Result};
use crate::graph::{AttributeTable, MaskedGraphView, NodeId};
use crate::numerics::{glorot_init, seeded_rng, sq_dist, truncated_svd, Adam, AdamConfig, DenseMatrix, SvdConfig};

#[derive(Debug, Clone)]
pub struct SvdDnnConfig {
    pub dim: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub svd: SvdConfig,
}

impl Default for SvdDnnConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            hidden: vec![64, 32],
            epochs: 300,
            lr: 0.01,
            seed: 0,
            svd: SvdConfig::default(),
        }
    }
}

/// Warm-node SVD coordinates and an MLP mapping attributes onto them.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDnnModel {
    pub warm_ids: Vec<NodeId>,
    /// `U · diag(√s)`, one row per warm node.
    pub coords: DenseMatrix,
    /// `[W1, b1, W2, b2, …]`; biases are `1 × width` rows.
    pub params: Vec<DenseMatrix>,
    pub loss_trace: Vec<f64>,
}

fn affine(a: &DenseMatrix, w: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let mut z = a.matmul(w)?;
    for i in 0..z.rows() {
        for (v, bias) in z.row_mut(i).iter_mut().zip(b.row(0)) {
            *v += bias;
        }
    }
    Ok(z)
}

/// ReLU on hidden layers, linear output.
pub fn mlp_forward(params: &[DenseMatrix], x: &DenseMatrix) -> Result<DenseMatrix> {
    let layers = params.len() / 2;
    let mut a = x.clone();
    for l in 0..layers {
        let z = affine(&a, &params[2 * l], &params[2 * l + 1])?;
        a = if l + 1 < layers { z.relu() } else { z };
    }
    Ok(a)
}

/// Mean squared error over all output entries and its gradients.
pub fn mlp_loss_and_grad(params: &[DenseMatrix], x: &DenseMatrix, y: &DenseMatrix) -> Result<(f64, Vec<DenseMatrix>)> {
    let layers = params.len() / 2;
    if layers == 0 || params.len() % 2 != 0 {
        return Err(Error::Invalid("MLP needs weight/bias pairs".into()));
    }
    let mut acts = vec![x.clone()];
    let mut pres = Vec::with_capacity(layers);
    for l in 0..layers {
        let z = affine(&acts[l], &params[2 * l], &params[2 * l + 1])?;
        acts.push(if l + 1 < layers { z.relu() } else { z.clone() });
        pres.push(z);
    }
    let out = &acts[layers];
    if out.shape() != y.shape() {
        return Err(Error::shape("mlp", format!("output {:?} vs target {:?}", out.shape(), y.shape())));
    }
    let count = (y.rows() * y.cols()) as f64;
    let mut loss = 0.0;
    let mut dz = DenseMatrix::zeros(y.rows(), y.cols());
    for ((g, &o), &t) in dz.as_mut_slice().iter_mut().zip(out.as_slice()).zip(y.as_slice()) {
        loss += (o - t) * (o - t);
        *g = 2.0 * (o - t) / count;
    }
    let mut grads = vec![DenseMatrix::zeros(0, 0); params.len()];
    for l in (0..layers).rev() {
        grads[2 * l] = acts[l].t_matmul(&dz)?;
        let mut db = DenseMatrix::zeros(1, dz.cols());
        for i in 0..dz.rows() {
            for (b, v) in db.row_mut(0).iter_mut().zip(dz.row(i)) {
                *b += v;
            }
        }
        grads[2 * l + 1] = db;
        if l > 0 {
            let mut da = dz.matmul_t(&params[2 * l])?;
            for (g, &p) in da.as_mut_slice().iter_mut().zip(pres[l - 1].as_slice()) {
                if p <= 0.0 {
                    *g = 0.0;
                }
            }
            dz = da;
        }
    }
    Ok((loss / count, grads))
}

/// Truncated SVD of the warm×warm training adjacency, then full-batch Adam
/// regression of warm attributes onto the item coordinates.
pub fn svd_dnn_train(masked: &MaskedGraphView, attrs: &AttributeTable, config: &SvdDnnConfig) -> Result<SvdDnnModel> {
    let warm_ids = masked.warm_ids.clone();
    if warm_ids.is_empty() {
        return Err(Error::Invalid("no warm nodes".into()));
    }
    let s = masked.warm_subgraph().to_sparse();
    let op = (s.clone(), s.transpose());
    let mut rng = seeded_rng(config.seed);
    let dim = config.dim.min(warm_ids.len());
    let svd = truncated_svd(&op, dim, config.svd, &mut rng)?;
    let roots: Vec<f64> = svd.singular_values.iter().map(|v| v.sqrt()).collect();
    let coords = DenseMatrix::from_fn(warm_ids.len(), dim, |i, j| svd.u.get(i, j) * roots[j]);

    let x = attrs.select(&warm_ids);
    let mut widths = vec![attrs.dim()];
    widths.extend(&config.hidden);
    widths.push(dim);
    let mut params = Vec::new();
    for w in widths.windows(2) {
        params.push(glorot_init(w[0], w[1], &mut rng));
        params.push(DenseMatrix::zeros(1, w[1]));
    }
    let names: Vec<String> = (0..params.len())
        .map(|i| format!("{}{}", if i % 2 == 0 { "W" } else { "b" }, i / 2 + 1))
        .collect();
    let shapes: Vec<(&str, (usize, usize))> = names.iter().map(String::as_str).zip(params.iter().map(|p| p.shape())).collect();
    let mut adam = Adam::new(AdamConfig::with_lr(config.lr), &shapes);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grads) = mlp_loss_and_grad(&params, &x, &coords)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        loss_trace.push(loss);
        let grad_refs: Vec<&DenseMatrix> = grads.iter().collect();
        let mut param_refs: Vec<&mut DenseMatrix> = params.iter_mut().collect();
        adam.step(&mut param_refs, &grad_refs)?;
    }
    Ok(SvdDnnModel {
        warm_ids,
        coords,
        params,
        loss_trace,
    })
}

impl SvdDnnModel {
    /// Maps attribute rows into the SVD space.
    pub fn embed(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        mlp_forward(&self.params, x)
    }

    /// Warm nodes by ascending distance to the mapped query; the score is
    /// the negated distance.
    pub fn rank(&self, attrs: &AttributeTable, query: NodeId, k: usize) -> Result<RankedList> {
        if query >= attrs.rows() {
            return Err(Error::Invalid(format!("query {query} has no attribute row")));
        }
        let p = self.embed(&attrs.select(&[query]))?;
        self.rank_point(p.row(0), query, k)
    }

    pub fn rank_point(&self, point: &[f64], query: NodeId, k: usize) -> Result<RankedList> {
        if point.len() != self.coords.cols() {
            return Err(Error::shape("svd_dnn", "point dimension"));
        }
        let entries = self.warm_ids.iter().enumerate().map(|(r, &w)| {
            let d2 = sq_dist(point, self.coords.row(r));
            RankedEntry {
                candidate: w,
                score: -d2.sqrt(),
                key: -d2,
            }
        });
        Ok(RankedList::top_k(query, entries, k))
    }
}
