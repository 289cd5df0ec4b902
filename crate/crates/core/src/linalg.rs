//! Small dense linear-algebra helpers shared by the data and design stages.

use nalgebra::SymmetricEigen;

use crate::Matrix;

/// Relative singular-value threshold used for numerical rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Numerical rank: number of singular values above
/// `max(rows, cols) * sigma_max * RANK_RTOL`.
pub fn numerical_rank(m: &Matrix) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let sigma_max = sv.iter().copied().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return 0;
    }
    let threshold = m.nrows().max(m.ncols()) as f64 * sigma_max * RANK_RTOL;
    sv.iter().filter(|&&s| s > threshold).count()
}

/// `(m + m^T) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn max_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m)
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Symmetric block matrix `[[a, b], [b^T, c]]`.
pub fn block_sym(a: &Matrix, b: &Matrix, c: &Matrix) -> Matrix {
    let (p, q) = (a.nrows(), c.nrows());
    debug_assert_eq!(b.shape(), (p, q));
    let mut out = Matrix::zeros(p + q, p + q);
    out.view_mut((0, 0), (p, p)).copy_from(a);
    out.view_mut((0, p), (p, q)).copy_from(b);
    out.view_mut((p, 0), (q, p)).copy_from(&b.transpose());
    out.view_mut((p, p), (q, q)).copy_from(c);
    out
}

/// Inverse of a symmetric positive definite matrix via Cholesky, symmetrized.
pub fn spd_inverse(m: &Matrix) -> Option<Matrix> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))?;
    Some(symmetrize(&chol.inverse()))
}
