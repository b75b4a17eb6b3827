//! Dense and sparse linear algebra, initialization, optimization, and the
//! truncated SVD used by the embedding baselines.

mod adam;
mod gradcheck;
mod matrix;
mod svd;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, relative_error};
pub use matrix::{dot, pairwise_sq_dist, spmm, sq_dist, DenseMatrix, SparseRowMatrix};
pub use svd::{truncated_svd, LinearOperator, SvdConfig, TruncatedSvd};

use rand::{Rng as _, SeedableRng};

/// Seedable pseudo-random generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Glorot-uniform initialization: entries uniform in `±sqrt(6 / (rows + cols))`.
pub fn glorot_init(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_is_deterministic() {
        let a = glorot_init(7, 5, &mut seeded_rng(1));
        let b = glorot_init(7, 5, &mut seeded_rng(1));
        assert_eq!(a, b);
        let c = glorot_init(7, 5, &mut seeded_rng(2));
        assert_ne!(a, c);
    }

    #[test]
    fn glorot_support_and_mean() {
        let m = glorot_init(1000, 1000, &mut seeded_rng(5));
        let bound = (6.0f64 / 2000.0).sqrt();
        let max = m.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max <= bound);
        // mean of U(-b, b) is 0 with std 2b/sqrt(12) per entry
        let mean = m.as_slice().iter().sum::<f64>() / 1e6;
        let sd_of_mean = 2.0 * bound / (12.0f64 * 1e6).sqrt();
        assert!(mean.abs() < 3.0 * sd_of_mean, "mean {mean}");
    }
}
