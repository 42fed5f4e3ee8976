use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use super::{Decision, Matrix};

fn to_dmatrix(m: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Pads with zero rows so the SVD of a wide matrix yields a full right basis.
fn square_padded(m: &Matrix<f64>) -> DMatrix<f64> {
    let n = m.rows().max(m.cols());
    let mut d = DMatrix::zeros(n, m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            d[(i, j)] = m[(i, j)];
        }
    }
    d
}

pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    let svd = SVD::new(to_dmatrix(m), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank: singular values above `eps_rank · σ_max`.
pub fn rank(m: &Matrix<f64>, eps_rank: f64) -> Decision<usize> {
    rank_scaled(m, eps_rank, 0.0)
}

/// Rank with cutoff `eps_rank · max(σ_max, scale)`. Shifted matrices `M − λI`
/// pass the size of `M` as `scale`, so that roundoff in an almost-zero shift
/// does not count as rank.
pub fn rank_scaled(m: &Matrix<f64>, eps_rank: f64, scale: f64) -> Decision<usize> {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0).max(scale);
    if smax == 0.0 {
        return Decision::exact(0);
    }
    let cutoff = eps_rank * smax;
    let value = s.iter().filter(|&&v| v > cutoff).count();
    let marginal = s.iter().any(|&v| v > cutoff / 10.0 && v < cutoff * 10.0);
    Decision { value, marginal }
}

/// Orthonormal null-space basis from the right singular vectors.
pub fn kernel_basis(m: &Matrix<f64>, eps_rank: f64) -> Vec<Vec<f64>> {
    kernel_basis_scaled(m, eps_rank, 0.0)
}

/// Null-space basis with the cutoff of [`rank_scaled`].
pub fn kernel_basis_scaled(m: &Matrix<f64>, eps_rank: f64, scale: f64) -> Vec<Vec<f64>> {
    let cols = m.cols();
    let svd = SVD::new(square_padded(m), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b)).max(scale);
    let cutoff = eps_rank * smax;
    (0..svd.singular_values.len())
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= cutoff)
        .map(|i| (0..cols).map(|j| v_t[(i, j)]).collect())
        .collect()
}

/// Least-squares solution of `m z = b` by SVD, accepted when the residual is
/// below `eps_rank · (‖m‖·‖z‖ + ‖b‖)`.
pub fn solve(m: &Matrix<f64>, b: &[f64], eps_rank: f64) -> Option<Vec<f64>> {
    let a = square_padded(m);
    let mut rhs = nalgebra::DVector::zeros(a.nrows());
    for (i, v) in b.iter().enumerate() {
        rhs[i] = *v;
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let z = svd.solve(&rhs, eps_rank * smax).ok()?;
    let residual = (&a * &z - &rhs).norm();
    (residual <= eps_rank * (smax * z.norm() + rhs.norm()).max(f64::MIN_POSITIVE)).then(|| z.iter().copied().collect())
}

pub fn eigenvalues(m: &Matrix<f64>) -> Vec<Complex64> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    let n = m.rows();
    if n == 1 {
        return vec![Complex64::new(m[(0, 0)], 0.0)];
    }
    let d = to_dmatrix(m);
    let max_iter = 200 * n.max(10);
    // Francis shifts stall on some exact permutation-like patterns; an
    // orthogonal similarity breaks the symmetry without moving eigenvalues.
    let schur = Schur::try_new(d.clone(), f64::EPSILON, max_iter)
        .or_else(|| (0..3).find_map(|k| {
            let q = householder(n, k);
            Schur::try_new(&q * &d * &q, f64::EPSILON, max_iter)
        }))
        .or_else(|| Schur::try_new(d.clone(), 1e3 * f64::EPSILON, 10 * max_iter))
        .expect("Schur iteration failed to converge");
    schur.complex_eigenvalues().iter().copied().collect()
}

/// Deterministic reflection `I − 2vvᵀ` with an irregular unit vector `v`.
fn householder(n: usize, k: usize) -> DMatrix<f64> {
    let v = nalgebra::DVector::from_fn(n, |i, _| ((i + 1 + k) as f64 * 0.754_877_666_246_692_7).sin());
    let v = &v / v.norm();
    DMatrix::identity(n, n) - 2.0 * &v * v.transpose()
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
