//! Truncated SVD by randomized subspace iteration.
//!
//! Each iteration multiplies a block of `d + oversample` vectors by `M` and
//! `Mᵀ`, and solves the small projected problem with one-sided Jacobi
//! rotations. Convergence is declared when every kept triplet satisfies
//! `‖M v − σ u‖ ≤ tol · σ₁`.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

use super::{DenseMatrix, Rng, SparseRowMatrix};

/// Anything that can be multiplied (and transpose-multiplied) by a dense block.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * x`
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
    /// `selfᵀ * x`
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix>;
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows()
    }
    fn ncols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.matmul(x)
    }
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.t_matmul(x)
    }
}

/// Sparse operator paired with its cached transpose.
impl LinearOperator for (SparseRowMatrix, SparseRowMatrix) {
    fn nrows(&self) -> usize {
        self.0.rows()
    }
    fn ncols(&self) -> usize {
        self.0.cols()
    }
    fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.0.spmm(x)
    }
    fn apply_t(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.1.spmm(x)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SvdConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub oversample: usize,
}

impl Default for SvdConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 1000,
            oversample: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows × d`, orthonormal columns.
    pub u: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols × d`, orthonormal columns.
    pub v: DenseMatrix,
    pub iterations: usize,
}

pub fn truncated_svd<M: LinearOperator + ?Sized>(
    m: &M,
    d: usize,
    config: SvdConfig,
    rng: &mut Rng,
) -> Result<TruncatedSvd> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if d == 0 || d > rows.min(cols) {
        return Err(Error::Invalid(format!(
            "svd rank {d} outside 1..={}",
            rows.min(cols)
        )));
    }
    let k = (d + config.oversample).min(rows.min(cols));

    let mut v = DenseMatrix::from_fn(cols, k, |_, _| rng.sample(StandardNormal));
    orthonormalize_columns(&mut v, rng);

    let mut prev: Option<(DenseMatrix, Vec<f64>)> = None;
    let mut residual = f64::INFINITY;
    for it in 0..=config.max_iter {
        let y = m.apply(&v)?;
        if let Some((u, sigma)) = &prev {
            residual = max_residual(&y, u, sigma, d);
            if residual <= config.tol {
                return Ok(TruncatedSvd {
                    u: u.column_range(0, d),
                    singular_values: sigma[..d].to_vec(),
                    v: v.column_range(0, d),
                    iterations: it,
                });
            }
        }
        if it == config.max_iter {
            break;
        }
        let mut q = y;
        orthonormalize_columns(&mut q, rng);
        let mut w = m.apply_t(&q)?;
        let rot = one_sided_jacobi(&mut w);

        // sort columns by norm, descending
        let norms: Vec<f64> = (0..k).map(|c| column_norm(&w, c)).collect();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

        let sigma: Vec<f64> = order.iter().map(|&c| norms[c]).collect();
        let mut new_v = DenseMatrix::zeros(cols, k);
        for (dst, &src) in order.iter().enumerate() {
            let s = norms[src];
            for r in 0..cols {
                new_v.set(r, dst, if s > 0.0 { w.get(r, src) / s } else { 0.0 });
            }
        }
        // null directions get arbitrary orthonormal completions
        orthonormalize_columns(&mut new_v, rng);
        let qr = q.matmul(&rot)?;
        let u = DenseMatrix::from_fn(rows, k, |r, dst| qr.get(r, order[dst]));
        v = new_v;
        prev = Some((u, sigma));
    }
    Err(Error::NoConvergence {
        method: "truncated_svd",
        iterations: config.max_iter,
        residual,
    })
}

fn max_residual(mv: &DenseMatrix, u: &DenseMatrix, sigma: &[f64], d: usize) -> f64 {
    let scale = sigma[0].max(f64::MIN_POSITIVE);
    (0..d)
        .map(|c| {
            (0..mv.rows())
                .map(|r| (mv.get(r, c) - sigma[c] * u.get(r, c)).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
        / scale
}

fn column_norm(m: &DenseMatrix, c: usize) -> f64 {
    (0..m.rows()).map(|r| m.get(r, c).powi(2)).sum::<f64>().sqrt()
}

/// Twice-applied modified Gram-Schmidt. Columns that vanish are replaced by
/// random vectors orthogonalized against the previous ones.
fn orthonormalize_columns(m: &mut DenseMatrix, rng: &mut Rng) {
    let (rows, cols) = m.shape();
    for c in 0..cols {
        let original = column_norm(m, c);
        let mut attempts = 0;
        loop {
            for _pass in 0..2 {
                for p in 0..c {
                    let proj: f64 = (0..rows).map(|r| m.get(r, p) * m.get(r, c)).sum();
                    for r in 0..rows {
                        let v = m.get(r, c) - proj * m.get(r, p);
                        m.set(r, c, v);
                    }
                }
            }
            let norm = column_norm(m, c);
            if norm > 1e-10 * original.max(1.0) || attempts > 8 {
                for r in 0..rows {
                    let v = m.get(r, c) / norm;
                    m.set(r, c, v);
                }
                break;
            }
            attempts += 1;
            for r in 0..rows {
                m.set(r, c, rng.sample(StandardNormal));
            }
        }
    }
}

/// Rotates the columns of `w` until they are mutually orthogonal and
/// returns the accumulated rotation.
fn one_sided_jacobi(w: &mut DenseMatrix) -> DenseMatrix {
    let (rows, k) = w.shape();
    let mut rot = DenseMatrix::identity(k);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..rows {
                    let (a, b) = (w.get(r, p), w.get(r, q));
                    alpha += a * a;
                    beta += b * b;
                    gamma += a * b;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..rows {
                    let (a, b) = (w.get(r, p), w.get(r, q));
                    w.set(r, p, c * a - s * b);
                    w.set(r, q, s * a + c * b);
                }
                for r in 0..k {
                    let (a, b) = (rot.get(r, p), rot.get(r, q));
                    rot.set(r, p, c * a - s * b);
                    rot.set(r, q, s * a + c * b);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    rot
}
