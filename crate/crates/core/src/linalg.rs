//! Dense decompositions, converted to and from nalgebra storage.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn to_faer(a: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Thin SVD `a = U diag(s) Vᵀ` with `s` nonincreasing.
pub(crate) fn thin_svd(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let svd = to_faer(a)
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i].max(0.0)).collect();
    Ok((values, from_faer(svd.U()), from_faer(svd.V())))
}

/// Eigenvalues (nondecreasing) and eigenvectors of the symmetric part of `a`.
pub(crate) fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let sym = (a + a.transpose()) * 0.5;
    let evd = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("eigendecomposition did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok((DVector::from_fn(s.nrows(), |i, _| s[i]), from_faer(evd.U())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_constant_matrix() {
        // exactly rank-deficient input that trips some bidiagonal SVD codes
        for m in [50, 64, 100] {
            let a = DMatrix::from_element(m, m, 1.0 / m as f64);
            let (s, u, v) = thin_svd(&a).unwrap();
            assert!((s[0] - 1.0).abs() < 1e-12);
            assert!(s[1] < 1e-12);
            let rec = &u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose();
            assert!((rec - &a).amax() < 1e-13);
            let (e, q) = sym_eigen(&a).unwrap();
            assert!((e[m - 1] - 1.0).abs() < 1e-12 && e[0].abs() < 1e-12);
            let rec = &q * DMatrix::from_diagonal(&e) * q.transpose();
            assert!((rec - &a).amax() < 1e-13);
        }
    }
}
