use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dot, sq_dist, DenseMatrix, SparseRowMatrix};

use super::{DecoderKind, GravityEmbedding};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Probability that `i` points to `j` under the gravity decoder.
pub fn decode_gravity(emb: &GravityEmbedding, lambda: f64, eps_dist: f64, i: usize, j: usize) -> f64 {
    let r = sq_dist(emb.positions.row(i), emb.positions.row(j));
    sigmoid(emb.masses[j] - lambda * r.max(eps_dist).ln())
}

pub fn decode_inner(z: &DenseMatrix, i: usize, j: usize) -> f64 {
    sigmoid(dot(z.row(i), z.row(j)))
}

pub fn decode_source_target(z: &DenseMatrix, i: usize, j: usize) -> Result<f64> {
    if z.cols() % 2 != 0 {
        return Err(Error::Invalid(format!(
            "source-target decoding needs an even dimension, got {}",
            z.cols()
        )));
    }
    Ok(sigmoid(DecoderKind::SourceTarget.logit(z.row(i), z.row(j))))
}

/// Adjacency labels plus the weighted cross-entropy constants
/// `w_pos = (n² − s)/s` and `norm = n² / (2(n² − s))`, `s = Σ A_ij`.
#[derive(Debug, Clone)]
pub struct ReconstructionTargets {
    adj: SparseRowMatrix,
    adj_t: SparseRowMatrix,
    pub pos_weight: f64,
    pub norm: f64,
}

impl ReconstructionTargets {
    pub fn new(adj: SparseRowMatrix) -> Result<Self> {
        if adj.rows() != adj.cols() {
            return Err(Error::shape("targets", format!("{}x{}", adj.rows(), adj.cols())));
        }
        let n2 = (adj.rows() * adj.rows()) as f64;
        let s = adj.sum();
        if !(s > 0.0) {
            return Err(Error::EmptyGraph);
        }
        Ok(Self {
            adj_t: adj.transpose(),
            adj,
            pos_weight: (n2 - s) / s,
            norm: n2 / (2.0 * (n2 - s)),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.rows()
    }

    pub fn adjacency(&self) -> &SparseRowMatrix {
        &self.adj
    }
}

/// Walks the sorted nonzeros of a sparse row while `j` increases.
struct Cursor<'a> {
    cols: &'a [usize],
    vals: &'a [f64],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new((cols, vals): (&'a [usize], &'a [f64])) -> Self {
        Self { cols, vals, pos: 0 }
    }

    #[inline]
    fn at(&mut self, j: usize) -> f64 {
        if self.pos < self.cols.len() && self.cols[self.pos] == j {
            self.pos += 1;
            self.vals[self.pos - 1]
        } else {
            0.0
        }
    }
}

/// Weighted cross entropy over all `n²` ordered pairs (diagonal included)
/// and its gradient with respect to the raw encoder output.
///
/// Each row `i` evaluates both `i → j` and `j → i` so every output row is
/// computed independently; the total is summed in row order.
pub fn reconstruction_loss_and_grad(
    z: &DenseMatrix,
    targets: &ReconstructionTargets,
    decoder: &DecoderKind,
) -> Result<(f64, DenseMatrix)> {
    let n = z.rows();
    if targets.node_count() != n {
        return Err(Error::shape(
            "reconstruction",
            format!("{n} embedding rows vs {} graph nodes", targets.node_count()),
        ));
    }
    decoder.validate(z.cols())?;
    let w = targets.pos_weight;
    let coef = targets.norm / (n as f64 * n as f64);
    let width = z.cols();

    // dℓ/dx for ℓ = w·a·softplus(−x) + (1−a)·softplus(x)
    let dlogit = |x: f64, a: f64| coef * (sigmoid(x) * (w * a + 1.0 - a) - w * a);
    let pair_loss = |x: f64, a: f64| {
        if a == 0.0 {
            softplus(x)
        } else {
            w * a * softplus(-x) + (1.0 - a) * softplus(x)
        }
    };

    let rows: Vec<(f64, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = z.row(i);
            let mut out_row = Cursor::new(targets.adj.row(i));
            let mut in_col = Cursor::new(targets.adj_t.row(i));
            let mut grad = vec![0.0; width];
            let mut loss = 0.0;
            match *decoder {
                DecoderKind::Gravity { lambda, eps_dist } => {
                    let d = width - 1;
                    let mi = zi[d];
                    for j in 0..n {
                        let zj = z.row(j);
                        let (a_ij, a_ji) = (out_row.at(j), in_col.at(j));
                        let r = if i == j { 0.0 } else { sq_dist(&zi[..d], &zj[..d]) };
                        let log_r = r.max(eps_dist).ln();
                        let x_ij = zj[d] - lambda * log_r;
                        let x_ji = mi - lambda * log_r;
                        loss += pair_loss(x_ij, a_ij);
                        let g_ij = dlogit(x_ij, a_ij);
                        let g_ji = dlogit(x_ji, a_ji);
                        grad[d] += g_ji;
                        if r > eps_dist {
                            let k = -2.0 * lambda * (g_ij + g_ji) / r;
                            for c in 0..d {
                                grad[c] += k * (zi[c] - zj[c]);
                            }
                        }
                    }
                }
                DecoderKind::InnerProduct => {
                    for j in 0..n {
                        let zj = z.row(j);
                        let (a_ij, a_ji) = (out_row.at(j), in_col.at(j));
                        let x = dot(zi, zj);
                        loss += pair_loss(x, a_ij);
                        let g = dlogit(x, a_ij) + dlogit(x, a_ji);
                        // the diagonal term x = ‖z_i‖² has derivative 2·z_i,
                        // which g_ij + g_ji already accounts for
                        for c in 0..width {
                            grad[c] += g * zj[c];
                        }
                    }
                }
                DecoderKind::SourceTarget => {
                    let h = width / 2;
                    for j in 0..n {
                        let zj = z.row(j);
                        let (a_ij, a_ji) = (out_row.at(j), in_col.at(j));
                        let x_ij = dot(&zi[..h], &zj[h..]);
                        let x_ji = dot(&zj[..h], &zi[h..]);
                        loss += pair_loss(x_ij, a_ij);
                        let g_ij = dlogit(x_ij, a_ij);
                        let g_ji = dlogit(x_ji, a_ji);
                        for c in 0..h {
                            grad[c] += g_ij * zj[h + c];
                            grad[h + c] += g_ji * zj[c];
                        }
                    }
                }
            }
            (loss, grad)
        })
        .collect();

    let mut total = 0.0;
    let mut grad = DenseMatrix::zeros(n, width);
    for (i, (l, g)) in rows.into_iter().enumerate() {
        total += l;
        grad.row_mut(i).copy_from_slice(&g);
    }
    Ok((targets.norm * total / (n as f64 * n as f64), grad))
}
