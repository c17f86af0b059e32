use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::matrix::Matrix;

/// Gaussian initialization with variance `2 / (fan_in + fan_out)`.
pub fn glorot_init<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let std = (2.0 / (rows + cols) as f64).sqrt();
    gaussian(rows, cols, std, rng)
}

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, std: f64, rng: &mut R) -> Matrix {
    let normal = Normal::new(0.0, std).expect("standard deviation is finite and non-negative");
    let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_per_seed() {
        let a = glorot_init(4, 5, &mut ChaCha8Rng::seed_from_u64(9));
        let b = glorot_init(4, 5, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn variance_matches_fan_sum() {
        let w = glorot_init(1000, 1000, &mut ChaCha8Rng::seed_from_u64(1));
        let n = w.len() as f64;
        let mean = w.as_slice().iter().sum::<f64>() / n;
        let var = w.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 2.0 / 2000.0;
        assert!((var - target).abs() <= 0.1 * target, "variance {var}");
    }

    #[test]
    fn one_by_one() {
        let w = glorot_init(1, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(w.shape(), (1, 1));
        assert!(w[(0, 0)].is_finite());
    }
}
