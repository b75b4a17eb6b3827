use rand::Rng as _;

use super::{DenseMatrix, Rng};

/// Magnitude below which both gradients are treated as zero and the
/// absolute difference is reported instead of a ratio.
const ZERO_FLOOR: f64 = 1e-10;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < ZERO_FLOOR {
        diff
    } else {
        diff / scale
    }
}

/// Compares analytic gradients against central differences on randomly
/// probed coordinates and returns the worst relative error.
///
/// `loss_fn` returns `(loss, gradients)` for a parameter list; it must be
/// deterministic for fixed parameters. When `probe_count` is at least the
/// total number of coordinates, every coordinate is checked.
pub fn grad_check<F>(
    mut loss_fn: F,
    params: &[DenseMatrix],
    probe_count: usize,
    h: f64,
    rng: &mut Rng,
) -> f64
where
    F: FnMut(&[DenseMatrix]) -> (f64, Vec<DenseMatrix>),
{
    let (_, analytic) = loss_fn(params);
    assert_eq!(analytic.len(), params.len(), "one gradient per parameter block");

    let sizes: Vec<usize> = params.iter().map(|p| p.as_slice().len()).collect();
    let total: usize = sizes.iter().sum();
    let coords: Vec<usize> = if probe_count >= total {
        (0..total).collect()
    } else {
        (0..probe_count).map(|_| rng.random_range(0..total)).collect()
    };

    let mut work: Vec<DenseMatrix> = params.to_vec();
    let mut worst = 0.0f64;
    for flat in coords {
        let (mut block, mut idx) = (0, flat);
        while idx >= sizes[block] {
            idx -= sizes[block];
            block += 1;
        }
        let orig = work[block].as_slice()[idx];
        work[block].as_mut_slice()[idx] = orig + h;
        let (plus, _) = loss_fn(&work);
        work[block].as_mut_slice()[idx] = orig - h;
        let (minus, _) = loss_fn(&work);
        work[block].as_mut_slice()[idx] = orig;

        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[block].as_slice()[idx], numeric);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn quadratic_is_exact() {
        let theta = vec![
            DenseMatrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 3.5, -0.25, 1.0]).unwrap(),
            DenseMatrix::from_vec(1, 2, vec![-2.0, 0.75]).unwrap(),
        ];
        let loss = |p: &[DenseMatrix]| {
            let l = p
                .iter()
                .flat_map(|m| m.as_slice())
                .map(|v| v * v / 2.0)
                .sum::<f64>();
            (l, p.to_vec())
        };
        let err = grad_check(loss, &theta, 200, 1e-5, &mut seeded_rng(0));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn constant_coordinate_has_zero_gradient() {
        let theta = vec![DenseMatrix::from_vec(1, 2, vec![1.0, 5.0]).unwrap()];
        // loss ignores the second coordinate
        let loss = |p: &[DenseMatrix]| {
            let x = p[0].get(0, 0);
            let g = DenseMatrix::from_vec(1, 2, vec![2.0 * x, 0.0]).unwrap();
            (x * x, vec![g])
        };
        assert!(grad_check(loss, &theta, 10, 1e-5, &mut seeded_rng(0)) < 1e-8);
    }

    #[test]
    fn detects_wrong_gradient() {
        let theta = vec![DenseMatrix::from_vec(1, 1, vec![2.0]).unwrap()];
        let loss = |p: &[DenseMatrix]| {
            let x = p[0].get(0, 0);
            (x * x, vec![DenseMatrix::from_vec(1, 1, vec![3.0 * x]).unwrap()])
        };
        assert!(grad_check(loss, &theta, 1, 1e-5, &mut seeded_rng(0)) > 0.1);
    }
}
