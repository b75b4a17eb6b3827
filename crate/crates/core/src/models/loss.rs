use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Rng};

/// Weighted binary cross entropy between a dense reconstruction `Â` and the
/// (soft) adjacency `A`:
///
/// `norm / n² · Σ −[w_pos·A_ij·log Â_ij + (1 − A_ij)·log(1 − Â_ij)]`
pub fn loss_weighted_bce(a_hat: &DenseMatrix, a: &DenseMatrix) -> Result<f64> {
    let n = a.rows();
    if a.shape() != (n, n) || a_hat.shape() != (n, n) {
        return Err(Error::shape(
            "loss_weighted_bce",
            format!("{:?} vs {:?}", a_hat.shape(), a.shape()),
        ));
    }
    let n2 = (n * n) as f64;
    let s: f64 = a.as_slice().iter().sum();
    if !(s > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let w = (n2 - s) / s;
    let norm = n2 / (2.0 * (n2 - s));
    let total: f64 = a_hat
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(&p, &y)| -(w * y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
        .sum();
    Ok(norm * total / n2)
}

/// `−1/(2n) · Σ (1 + 2·logσ − μ² − σ²)` for `n` rows.
pub fn loss_kl(mu: &DenseMatrix, log_sigma: &DenseMatrix) -> Result<f64> {
    if mu.shape() != log_sigma.shape() {
        return Err(Error::shape("loss_kl", format!("{:?} vs {:?}", mu.shape(), log_sigma.shape())));
    }
    let n = mu.rows() as f64;
    let s: f64 = mu
        .as_slice()
        .iter()
        .zip(log_sigma.as_slice())
        .map(|(&m, &ls)| 1.0 + 2.0 * ls - m * m - (2.0 * ls).exp())
        .sum();
    Ok(-s / (2.0 * n))
}

/// Gradients of [`loss_kl`] with respect to `μ` and `logσ`.
pub fn kl_grad(mu: &DenseMatrix, log_sigma: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = mu.rows() as f64;
    (
        mu.map(|m| m / n),
        log_sigma.map(|ls| ((2.0 * ls).exp() - 1.0) / n),
    )
}

/// Reparameterized draw `μ + exp(logσ) ⊙ ε` with standard normal `ε`.
pub fn sample_latent(mu: &DenseMatrix, log_sigma: &DenseMatrix, rng: &mut Rng) -> Result<DenseMatrix> {
    let noise = standard_normal(mu.rows(), mu.cols(), rng);
    reparameterize(mu, log_sigma, &noise)
}

pub(crate) fn standard_normal(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub(crate) fn reparameterize(mu: &DenseMatrix, log_sigma: &DenseMatrix, noise: &DenseMatrix) -> Result<DenseMatrix> {
    if mu.shape() != log_sigma.shape() || mu.shape() != noise.shape() {
        return Err(Error::shape(
            "sample_latent",
            format!("{:?}, {:?}, {:?}", mu.shape(), log_sigma.shape(), noise.shape()),
        ));
    }
    let data = mu
        .as_slice()
        .iter()
        .zip(log_sigma.as_slice())
        .zip(noise.as_slice())
        .map(|((&m, &ls), &e)| m + ls.exp() * e)
        .collect();
    DenseMatrix::from_vec(mu.rows(), mu.cols(), data)
}
