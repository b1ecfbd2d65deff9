//! Dense symmetric linear algebra: covariance construction, eigendecomposition,
//! objective evaluation and principal-submatrix spectra.
//!
//! The eigensolver is deterministic: cyclic Jacobi sweeps for matrices up to
//! [`JACOBI_MAX_DIM`], Householder tridiagonalization followed by implicit QL
//! above that. Eigenvectors use a fixed sign convention (largest-magnitude
//! entry positive, lowest index on ties) so results are reproducible.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpcaError};
use crate::solver::ComponentSet;

/// Largest dimension handled by the Jacobi solver.
pub const JACOBI_MAX_DIM: usize = 64;

/// Default relative eigenvalue cutoff used for rank truncation.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// Absolute floor below which eigenvalues are treated as zero.
pub const ABS_EIG_FLOOR: f64 = 1e-14;

/// An `n x d` matrix of samples (rows) by variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    centered: bool,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return invalid("data matrix must have at least one row and one column");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("data matrix contains non-finite entries");
        }
        Ok(Self {
            values,
            centered: false,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Subtracts each column mean.
    pub fn centered(&self) -> DataMatrix {
        let mean = self.values.mean_axis(Axis(0)).expect("non-empty by construction");
        let values = &self.values - &mean.insert_axis(Axis(0));
        DataMatrix { values, centered: true }
    }
}

/// A real symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    values: Array2<f64>,
}

impl PsdMatrix {
    /// Validates symmetry (relative 1e-12) and numerical PSD-ness
    /// (smallest eigenvalue at least `-1e-9 * lambda_1`). The stored matrix is
    /// symmetrized exactly.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let m = Self::symmetric(values)?;
        let eig = sym_eigen(m.values.view());
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let bottom = eig.values.last().copied().unwrap_or(0.0);
        if bottom < -1e-9 * top.max(ABS_EIG_FLOOR) {
            return invalid(format!(
                "matrix is not positive semidefinite (smallest eigenvalue {bottom:e})"
            ));
        }
        Ok(m)
    }

    fn symmetric(values: Array2<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() || values.nrows() == 0 {
            return invalid(format!(
                "expected a non-empty square matrix, got {}x{}",
                values.nrows(),
                values.ncols()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("matrix contains non-finite entries");
        }
        let scale = max_abs(values.view());
        let d = values.nrows();
        for i in 0..d {
            for j in (i + 1)..d {
                if (values[[i, j]] - values[[j, i]]).abs() > 1e-12 * scale {
                    return invalid(format!("matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self {
            values: symmetrize(values),
        })
    }

    /// Builds from a matrix that is PSD by construction (Gram products, rank
    /// truncations). Only symmetry is enforced.
    pub(crate) fn from_gram(values: Array2<f64>) -> Self {
        Self {
            values: symmetrize(values),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.diag().sum()
    }

    pub fn scaled(&self, c: f64) -> PsdMatrix {
        assert!(c >= 0.0, "scale must be nonnegative");
        PsdMatrix {
            values: &self.values * c,
        }
    }

    /// `A[I, I]` for the given index list, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> Array2<f64> {
        Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| self.values[[idx[a], idx[b]]])
    }

    /// Principal submatrix as a PSD matrix (principal submatrices of PSD
    /// matrices are PSD).
    pub fn restrict(&self, idx: &[usize]) -> PsdMatrix {
        PsdMatrix {
            values: self.submatrix(idx),
        }
    }
}

fn symmetrize(mut a: Array2<f64>) -> Array2<f64> {
    let d = a.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
    a
}

pub(crate) fn max_abs(a: ArrayView2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Truncated eigendecomposition `A ~ U diag(lambda) U^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigFactor {
    /// `d x r`, orthonormal columns.
    pub eigvecs: Array2<f64>,
    /// Length `r`, nonincreasing, strictly positive.
    pub eigvals: Vec<f64>,
    pub source_trace: f64,
}

impl EigFactor {
    pub fn dim(&self) -> usize {
        self.eigvecs.nrows()
    }

    pub fn rank(&self) -> usize {
        self.eigvals.len()
    }

    /// `U diag(sqrt(lambda))`, the `d x r` factor whose product with a
    /// candidate basis gives the weight matrix.
    pub fn sqrt_factor(&self) -> Array2<f64> {
        let mut b = self.eigvecs.clone();
        for (mut col, &l) in b.columns_mut().into_iter().zip(&self.eigvals) {
            col *= l.sqrt();
        }
        b
    }

    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let b = self.sqrt_factor();
        b.dot(&b.t())
    }
}

/// Full symmetric eigendecomposition, eigenvalues in nonincreasing order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: Array2<f64>,
}

/// Eigendecomposition of a symmetric matrix (not necessarily PSD).
pub fn sym_eigen(a: ArrayView2<f64>) -> SymEigen {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "sym_eigen needs a square matrix");
    let (vals, vecs) = if d <= JACOBI_MAX_DIM {
        jacobi_eigen(a)
    } else {
        tridiagonal_ql_eigen(a)
    };
    finish_eigen(vals, vecs)
}

/// Sorts into nonincreasing order and applies the sign convention.
fn finish_eigen(vals: Vec<f64>, vecs: Array2<f64>) -> SymEigen {
    let d = vals.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let mut vectors = Array2::zeros((d, d));
    let mut values = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        values.push(vals[src]);
        let mut col = vecs.column(src).to_owned();
        fix_sign(&mut col);
        vectors.column_mut(dst).assign(&col);
    }
    SymEigen { values, vectors }
}

/// Makes the largest-magnitude entry positive (lowest index wins ties).
pub(crate) fn fix_sign(v: &mut Array1<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
}

pub(crate) fn jacobi_eigen(a: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], Array2::eye(n));
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| m[i * n + i]).collect();
    let vecs = Array2::from_shape_vec((n, n), v).expect("shape");
    (vals, vecs)
}

/// Householder reduction to tridiagonal form and implicit-shift QL
/// (EISPACK tred2/tql2 lineage).
#[allow(clippy::needless_range_loop)]
pub(crate) fn tridiagonal_ql_eigen(a: ArrayView2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 0 {
        return (d, Array2::zeros((0, 0)));
    }

    // tred2
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;

    // tql2
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 200 {
                    break;
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    let flat: Vec<f64> = v.into_iter().flatten().collect();
    (d, Array2::from_shape_vec((n, n), flat).expect("shape"))
}

/// `(1/n) S^T S` (or `S^T S` when `normalize` is false), optionally after
/// column-centering.
pub fn gram_from_data(s: &DataMatrix, center: bool, normalize: bool) -> Result<PsdMatrix> {
    if s.rows() == 0 || s.cols() == 0 {
        return invalid("empty data matrix");
    }
    let centered;
    let src = if center && !s.is_centered() {
        centered = s.centered();
        &centered
    } else {
        s
    };
    let mut g = src.values().t().dot(src.values());
    if normalize {
        g /= s.rows() as f64;
    }
    Ok(PsdMatrix::from_gram(g))
}

/// Keeps eigenpairs with `lambda_i > max(rel_tol * lambda_1, 1e-14)`, at most
/// `rank_cap` of them.
pub fn sym_eig_truncated(a: &PsdMatrix, rank_cap: Option<usize>, rel_tol: f64) -> Result<EigFactor> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return invalid(format!("rel_tol must lie in (0, 1), got {rel_tol}"));
    }
    if rank_cap == Some(0) {
        return invalid("rank cap must be at least 1");
    }
    let eig = sym_eigen(a.values().view());
    let top = eig.values[0];
    if top <= ABS_EIG_FLOOR {
        return Err(SpcaError::ZeroMatrix);
    }
    let cutoff = (rel_tol * top).max(ABS_EIG_FLOOR);
    let mut r = eig.values.iter().take_while(|&&l| l > cutoff).count();
    if let Some(cap) = rank_cap {
        r = r.min(cap);
    }
    Ok(EigFactor {
        eigvecs: eig.vectors.slice(ndarray::s![.., ..r]).to_owned(),
        eigvals: eig.values[..r].to_vec(),
        source_trace: a.trace(),
    })
}

/// Total and per-component explained variance `Tr(X^T A X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variance {
    pub total: f64,
    pub per_component: Vec<f64>,
}

pub fn explained_variance(a: &PsdMatrix, x: &ComponentSet) -> Result<Variance> {
    if x.dim() != a.dim() {
        return invalid(format!(
            "component dimension {} does not match matrix dimension {}",
            x.dim(),
            a.dim()
        ));
    }
    let per_component: Vec<f64> = x
        .columns()
        .iter()
        .map(|c| quad_form_sparse(a.values(), &c.support, &c.values))
        .collect();
    Ok(Variance {
        total: per_component.iter().sum(),
        per_component,
    })
}

/// `x^T A x` for `x` supported on `support`.
pub(crate) fn quad_form_sparse(a: &Array2<f64>, support: &[usize], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&i, &xi) in support.iter().zip(values) {
        let mut row = 0.0;
        for (&j, &xj) in support.iter().zip(values) {
            row += a[[i, j]] * xj;
        }
        acc += xi * row;
    }
    acc
}

/// Largest eigenvalue of `A[I, I]` and its eigenvector embedded in `d`
/// coordinates (zeros off `I`).
pub fn principal_submatrix_lambda_max(a: &PsdMatrix, idx: &[usize]) -> Result<(f64, Array1<f64>)> {
    if idx.is_empty() {
        return invalid("index set must be nonempty");
    }
    let d = a.dim();
    let mut seen = vec![false; d];
    for &i in idx {
        if i >= d {
            return invalid(format!("index {i} out of range for dimension {d}"));
        }
        if std::mem::replace(&mut seen[i], true) {
            return invalid(format!("duplicate index {i}"));
        }
    }
    let (lambda, local) = block_top_eigenpair(a, idx);
    let mut full = Array1::zeros(d);
    for (&i, &v) in idx.iter().zip(local.iter()) {
        full[i] = v;
    }
    fix_sign(&mut full);
    Ok((lambda, full))
}

/// Top eigenpair of `A[I, I]` in local coordinates. Indices must be valid.
pub(crate) fn block_top_eigenpair(a: &PsdMatrix, idx: &[usize]) -> (f64, Array1<f64>) {
    if idx.len() == 1 {
        return (a.values()[[idx[0], idx[0]]], Array1::ones(1));
    }
    let eig = sym_eigen(a.submatrix(idx).view());
    (eig.values[0], eig.vectors.column(0).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::appendix_example;
    use crate::solver::SparseColumn;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn random_psd(d: usize, rank: usize, seed: u64) -> PsdMatrix {
        let b = random_matrix(d, rank, seed);
        PsdMatrix::new(b.dot(&b.t())).unwrap()
    }

    #[test]
    fn gram_identity_normalized() {
        let s = DataMatrix::new(Array2::eye(2)).unwrap();
        let g = gram_from_data(&s, false, true).unwrap();
        assert_eq!(g.values(), &array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn gram_centering_removes_constant_columns() {
        let s = DataMatrix::new(array![[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let g = gram_from_data(&s, true, true).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gram_matches_triple_loop() {
        let raw = random_matrix(5, 3, 7);
        let s = DataMatrix::new(raw.clone()).unwrap();
        let g = gram_from_data(&s, false, true).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for t in 0..5 {
                    acc += raw[[t, i]] * raw[[t, j]];
                }
                assert_abs_diff_eq!(g.values()[[i, j]], acc / 5.0, epsilon = 1e-12);
            }
        }
        let unnormalized = gram_from_data(&s, false, false).unwrap();
        assert_abs_diff_eq!(unnormalized.values()[[0, 1]], 5.0 * g.values()[[0, 1]], epsilon = 1e-12);
    }

    #[test]
    fn empty_data_rejected() {
        assert!(DataMatrix::new(Array2::zeros((0, 3))).is_err());
    }

    #[test]
    fn diagonal_truncation() {
        let a = PsdMatrix::new(Array2::from_diag(&array![3.0, 2.0, 0.0])).unwrap();
        let f = sym_eig_truncated(&a, None, DEFAULT_REL_TOL).unwrap();
        assert_eq!(f.rank(), 2);
        assert_abs_diff_eq!(f.eigvals[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.eigvals[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.eigvecs[[0, 0]], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.eigvecs[[1, 1]], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn appendix_spectrum() {
        let a = appendix_example(0.1, 0.1).unwrap();
        let f = sym_eig_truncated(&a, None, DEFAULT_REL_TOL).unwrap();
        let expected = [1.1, 0.9, 0.1, 0.1];
        assert_eq!(f.rank(), 4);
        for (got, want) in f.eigvals.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_three_reconstruction() {
        let a = random_psd(6, 3, 11);
        let f = sym_eig_truncated(&a, None, DEFAULT_REL_TOL).unwrap();
        assert_eq!(f.rank(), 3);
        let err = max_abs((f.reconstruct() - a.values()).view());
        assert!(err <= 1e-8, "reconstruction error {err}");
        let gram = f.eigvecs.t().dot(&f.eigvecs);
        assert!(max_abs((gram - Array2::<f64>::eye(3)).view()) <= 1e-9);
        assert_abs_diff_eq!(f.eigvals.iter().sum::<f64>(), a.trace(), epsilon = 1e-9 * a.trace());
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = PsdMatrix::new(Array2::zeros((3, 3))).unwrap();
        assert!(matches!(
            sym_eig_truncated(&a, None, DEFAULT_REL_TOL),
            Err(SpcaError::ZeroMatrix)
        ));
    }

    #[test]
    fn rank_cap_applies() {
        let a = random_psd(5, 5, 3);
        let f = sym_eig_truncated(&a, Some(2), DEFAULT_REL_TOL).unwrap();
        assert_eq!(f.rank(), 2);
    }

    #[test]
    fn non_psd_rejected() {
        assert!(PsdMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(PsdMatrix::new(array![[1.0, 0.5], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn jacobi_and_ql_agree() {
        for seed in 0..5 {
            let a = random_psd(12, 12, 100 + seed);
            let (v1, u1) = jacobi_eigen(a.values().view());
            let (v2, u2) = tridiagonal_ql_eigen(a.values().view());
            let e1 = finish_eigen(v1, u1);
            let e2 = finish_eigen(v2, u2);
            for i in 0..12 {
                assert_abs_diff_eq!(e1.values[i], e2.values[i], epsilon = 1e-10);
            }
            // both routes reconstruct
            for e in [&e1, &e2] {
                let lam = Array2::from_diag(&Array1::from(e.values.clone()));
                let rec = e.vectors.dot(&lam).dot(&e.vectors.t());
                assert!(max_abs((rec - a.values()).view()) < 1e-10);
            }
        }
    }

    #[test]
    fn large_matrix_uses_ql() {
        let a = random_psd(80, 10, 5);
        let f = sym_eig_truncated(&a, None, DEFAULT_REL_TOL).unwrap();
        assert_eq!(f.rank(), 10);
        let err = max_abs((f.reconstruct() - a.values()).view());
        assert!(err <= 1e-8 * f.eigvals[0], "reconstruction error {err}");
        let gram = f.eigvecs.t().dot(&f.eigvecs);
        assert!(max_abs((gram - Array2::<f64>::eye(10)).view()) <= 1e-9);
    }

    #[test]
    fn sign_convention() {
        let a = random_psd(5, 5, 9);
        let e = sym_eigen(a.values().view());
        for col in e.vectors.columns() {
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            assert!(col[best] > 0.0);
        }
    }

    #[test]
    fn scale_equivariance() {
        let a = random_psd(6, 4, 21);
        let f1 = sym_eig_truncated(&a, None, DEFAULT_REL_TOL).unwrap();
        let f2 = sym_eig_truncated(&a.scaled(3.5), None, DEFAULT_REL_TOL).unwrap();
        assert_eq!(f1.rank(), f2.rank());
        for i in 0..f1.rank() {
            assert_abs_diff_eq!(3.5 * f1.eigvals[i], f2.eigvals[i], epsilon = 1e-10);
        }
        assert!(max_abs((&f1.eigvecs - &f2.eigvecs).view()) < 1e-9);
    }

    fn unit_column(support: Vec<usize>, raw: &[f64]) -> SparseColumn {
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        SparseColumn {
            support,
            values: raw.iter().map(|v| v / n).collect(),
        }
    }

    #[test]
    fn identity_objective_is_k() {
        let a = PsdMatrix::new(Array2::eye(6)).unwrap();
        let x = ComponentSet::new(
            6,
            2,
            vec![
                unit_column(vec![0, 4], &[1.0, 2.0]),
                unit_column(vec![1, 3], &[-3.0, 0.5]),
            ],
        )
        .unwrap();
        let v = explained_variance(&a, &x).unwrap();
        assert_abs_diff_eq!(v.total, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn appendix_deflation_supports_objective() {
        let a = appendix_example(0.1, 0.1).unwrap();
        let (l1, v1) = principal_submatrix_lambda_max(&a, &[0, 3]).unwrap();
        let (l2, v2) = principal_submatrix_lambda_max(&a, &[1, 2]).unwrap();
        assert_abs_diff_eq!(l1, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(l2, 0.1, epsilon = 1e-12);
        let x = ComponentSet::new(
            4,
            2,
            vec![
                SparseColumn {
                    support: vec![0, 3],
                    values: vec![v1[0], v1[3]],
                },
                SparseColumn {
                    support: vec![1, 2],
                    values: vec![v2[1], v2[2]],
                },
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(explained_variance(&a, &x).unwrap().total, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn objective_matches_naive_loops() {
        let a = random_psd(7, 7, 31);
        let x = ComponentSet::new(
            7,
            3,
            vec![
                unit_column(vec![0, 2, 5], &[0.3, -1.0, 0.7]),
                unit_column(vec![1, 6, 3], &[2.0, 0.1, -0.4]),
            ],
        )
        .unwrap();
        let dense = x.to_dense();
        let mut naive = 0.0;
        for j in 0..2 {
            for p in 0..7 {
                for q in 0..7 {
                    naive += dense[[p, j]] * a.values()[[p, q]] * dense[[q, j]];
                }
            }
        }
        assert_abs_diff_eq!(explained_variance(&a, &x).unwrap().total, naive, epsilon = 1e-12);
        let v = explained_variance(&a.scaled(2.0), &x).unwrap().total;
        assert_abs_diff_eq!(v, 2.0 * naive, epsilon = 1e-12);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let a = PsdMatrix::new(Array2::eye(3)).unwrap();
        let x = ComponentSet::new(4, 1, vec![unit_column(vec![0], &[1.0])]).unwrap();
        assert!(explained_variance(&a, &x).is_err());
    }

    #[test]
    fn singleton_submatrix_is_diagonal_entry() {
        let a = random_psd(5, 3, 4);
        for i in 0..5 {
            let (l, v) = principal_submatrix_lambda_max(&a, &[i]).unwrap();
            assert_eq!(l, a.values()[[i, i]]);
            assert_eq!(v[i], 1.0);
        }
        assert!(principal_submatrix_lambda_max(&a, &[5]).is_err());
        assert!(principal_submatrix_lambda_max(&a, &[]).is_err());
    }
}
