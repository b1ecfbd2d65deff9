//! Low-rank surrogates of a covariance matrix.
//!
//! The solver's cost grows exponentially with the rank of its input, so it is
//! usually run on a rank-`r` sketch `A_bar` and the result is scored on `A`.
//! The loss is bounded by `2 k lambda_1(A - A_bar)`, which is reported with
//! each sketch.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{
    gram_from_data, max_abs, sym_eig_truncated, sym_eigen, DataMatrix, EigFactor, PsdMatrix, ABS_EIG_FLOOR,
    DEFAULT_REL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchMethod {
    TruncatedSvd,
    GaussianJl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub method: SketchMethod,
    pub target_rank: usize,
    /// Only used by the Gaussian sketch.
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SketchResult {
    pub a_bar: PsdMatrix,
    pub method: SketchMethod,
    pub rank: usize,
    pub seed: Option<u64>,
    /// Largest eigenvalue of `A - A_bar` (may be negative for the Gaussian
    /// sketch).
    pub error_lambda1: f64,
}

impl SketchResult {
    /// Eigen-factor of the sketch, which the solver enumerates over.
    pub fn factor(&self) -> Result<EigFactor> {
        sym_eig_truncated(&self.a_bar, Some(self.rank), DEFAULT_REL_TOL)
    }
}

/// Rank-`r` truncated eigendecomposition. The spectral error equals
/// `lambda_{r+1}(A)`; a sketch with `r >= d` is the identity.
pub fn svd_sketch(a: &PsdMatrix, r: usize) -> Result<SketchResult> {
    if r == 0 {
        return invalid("sketch rank must be at least 1");
    }
    let d = a.dim();
    if r >= d {
        return Ok(SketchResult {
            a_bar: a.clone(),
            method: SketchMethod::TruncatedSvd,
            rank: r,
            seed: None,
            error_lambda1: 0.0,
        });
    }
    let eig = sym_eigen(a.values().view());
    let kept = eig.values[..r].iter().take_while(|&&l| l > ABS_EIG_FLOOR).count();
    let mut b = eig.vectors.slice(ndarray::s![.., ..kept]).to_owned();
    for (mut col, &l) in b.columns_mut().into_iter().zip(&eig.values) {
        col *= l.sqrt();
    }
    let a_bar = PsdMatrix::from_gram(b.dot(&b.t()));
    Ok(SketchResult {
        a_bar,
        method: SketchMethod::TruncatedSvd,
        rank: r,
        seed: None,
        error_lambda1: eig.values[r].max(0.0),
    })
}

/// Truncated-SVD sketch of the covariance of a data matrix.
pub fn svd_sketch_data(s: &DataMatrix, center: bool, r: usize) -> Result<SketchResult> {
    svd_sketch(&gram_from_data(s, center, true)?, r)
}

/// `A_bar = (V R)(V R)^T` with `R` an `m x r` matrix of i.i.d. `N(0, 1/r)`
/// entries drawn from a seeded ChaCha8 stream (rand_distr's ziggurat sampler).
pub fn gaussian_sketch(a: &PsdMatrix, v: ArrayView2<f64>, r: usize, seed: u64) -> Result<SketchResult> {
    if r == 0 {
        return invalid("sketch rank must be at least 1");
    }
    if v.nrows() != a.dim() {
        return invalid(format!(
            "factor has {} rows, matrix has dimension {}",
            v.nrows(),
            a.dim()
        ));
    }
    let recon = v.dot(&v.t());
    let tol = 1e-9 * max_abs(a.values().view()).max(1.0);
    if max_abs((&recon - a.values()).view()) > tol {
        return invalid("factor V does not reproduce A = V V^T");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (1.0 / r as f64).sqrt()).expect("positive variance");
    let proj = Array2::from_shape_fn((v.ncols(), r), |_| normal.sample(&mut rng));
    let vr = v.dot(&proj);
    let a_bar = PsdMatrix::from_gram(vr.dot(&vr.t()));
    let diff = a.values() - a_bar.values();
    let error_lambda1 = sym_eigen(diff.view()).values[0];
    Ok(SketchResult {
        a_bar,
        method: SketchMethod::GaussianJl,
        rank: r,
        seed: Some(seed),
        error_lambda1,
    })
}

/// Gaussian sketch using the symmetric square root `V = U L^{1/2}`.
pub fn gaussian_sketch_psd(a: &PsdMatrix, r: usize, seed: u64) -> Result<SketchResult> {
    let eig = sym_eigen(a.values().view());
    let mut v = eig.vectors.clone();
    for (mut col, &l) in v.columns_mut().into_iter().zip(&eig.values) {
        col *= l.max(0.0).sqrt();
    }
    gaussian_sketch(a, v.view(), r, seed)
}

/// Computable upper bound `2 k max(lambda_1(A - A_bar), 0)` on the additive
/// loss from solving on the sketch.
pub fn sketch_error_term(sk: &SketchResult, k: usize) -> f64 {
    2.0 * k as f64 * sk.error_lambda1.max(0.0)
}

impl SketchSpec {
    pub fn apply(&self, a: &PsdMatrix) -> Result<SketchResult> {
        match self.method {
            SketchMethod::TruncatedSvd => svd_sketch(a, self.target_rank),
            SketchMethod::GaussianJl => gaussian_sketch_psd(a, self.target_rank, self.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::appendix_example;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn diagonal_svd_sketch() {
        let a = PsdMatrix::new(Array2::from_diag(&array![3.0, 2.0, 1.0])).unwrap();
        let sk = svd_sketch(&a, 2).unwrap();
        let expected = Array2::from_diag(&array![3.0, 2.0, 0.0]);
        assert!(max_abs((sk.a_bar.values() - &expected).view()) < 1e-14);
        assert_eq!(sk.error_lambda1, 1.0);
        assert_eq!(sketch_error_term(&sk, 2), 4.0);
    }

    #[test]
    fn appendix_svd_sketch() {
        let a = appendix_example(0.1, 0.1).unwrap();
        let sk = svd_sketch(&a, 2).unwrap();
        let f = sk.factor().unwrap();
        assert_eq!(f.rank(), 2);
        assert!((f.eigvals[0] - 1.1).abs() < 1e-12);
        assert!((f.eigvals[1] - 0.9).abs() < 1e-12);
        assert!((sk.error_lambda1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn full_rank_sketch_is_identity() {
        let a = appendix_example(0.2, 0.3).unwrap();
        let sk = svd_sketch(&a, 4).unwrap();
        assert_eq!(sk.a_bar, a);
        assert_eq!(sk.error_lambda1, 0.0);
        assert_eq!(sketch_error_term(&sk, 3), 0.0);
    }

    #[test]
    fn svd_error_equals_next_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in 1..5 {
            let b = Array2::from_shape_fn((6, 6), |_| rng.random_range(-1.0..1.0));
            let a = PsdMatrix::new(b.dot(&b.t())).unwrap();
            let sk = svd_sketch(&a, r).unwrap();
            let diff = a.values() - sk.a_bar.values();
            let top = sym_eigen(diff.view()).values[0];
            let next = sym_eigen(a.values().view()).values[r];
            assert!((top - next).abs() < 1e-9);
            assert!((sk.error_lambda1 - next).abs() < 1e-9);
            PsdMatrix::new(sk.a_bar.values().clone()).unwrap();
        }
    }

    #[test]
    fn zero_factor_gaussian() {
        let a = PsdMatrix::new(Array2::zeros((3, 3))).unwrap();
        let v = Array2::zeros((3, 2));
        let sk = gaussian_sketch(&a, v.view(), 4, 1).unwrap();
        assert!(sk.a_bar.values().iter().all(|&x| x == 0.0));
        assert_eq!(sketch_error_term(&sk, 2), 0.0);
    }

    #[test]
    fn inconsistent_factor_rejected() {
        let a = PsdMatrix::new(Array2::eye(3)).unwrap();
        let v = Array2::from_elem((3, 3), 1.0);
        assert!(gaussian_sketch(&a, v.view(), 2, 0).is_err());
    }

    #[test]
    fn gaussian_seed_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = Array2::from_shape_fn((8, 8), |_| rng.random_range(-1.0..1.0));
        let a = PsdMatrix::new(b.dot(&b.t())).unwrap();
        let s1 = gaussian_sketch(&a, b.view(), 5, 42).unwrap();
        let s2 = gaussian_sketch(&a, b.view(), 5, 42).unwrap();
        let s3 = gaussian_sketch(&a, b.view(), 5, 43).unwrap();
        assert_eq!(s1.a_bar, s2.a_bar);
        assert_eq!(s1.error_lambda1.to_bits(), s2.error_lambda1.to_bits());
        assert_ne!(s1.a_bar, s3.a_bar);
        PsdMatrix::new(s1.a_bar.values().clone()).unwrap();
        assert!(s1.factor().unwrap().rank() <= 5);
    }
}
