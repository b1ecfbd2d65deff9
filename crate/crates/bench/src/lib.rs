//! Seeded workload generators shared by the benchmarks.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spca_core::PsdMatrix;

/// `B B^T / m` for a `d x m` matrix `B` with entries uniform on `[-1, 1]`.
pub fn random_psd(d: usize, m: usize, seed: u64) -> PsdMatrix {
    let b = random_matrix(d, m, seed);
    PsdMatrix::new(b.dot(&b.t()) / m as f64).expect("gram matrix is PSD")
}

/// `rows x cols` matrix with entries uniform on `[-1, 1]`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..=1.0))
}
