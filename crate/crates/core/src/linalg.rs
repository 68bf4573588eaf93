//! Thin wrappers over faer for the three dense kernels DMD needs.

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `A = U diag(s) Vᵀ` with `k = min(rows, cols)` columns in `U` and `V`.
pub(crate) struct ThinSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
}

pub(crate) fn thin_svd(a: &Mat<f64>) -> Result<ThinSvd> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Linalg(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    Ok(ThinSvd {
        u: svd.U().to_owned(),
        s: (0..s.nrows()).map(|i| s[i]).collect(),
        v: svd.V().to_owned(),
    })
}

/// Eigenvalues and right eigenvectors (columns) of a real square matrix.
/// Real eigenvalues come back with an exactly zero imaginary part and complex
/// ones in conjugate pairs.
pub(crate) fn eigen(a: &Mat<f64>) -> Result<(Vec<Complex64>, Mat<Complex64>)> {
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .eigen()
        .map_err(|e| Error::Linalg(format!("eigendecomposition did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Least-squares solution of `A x = b` for a tall complex `A` of full column
/// rank.
pub(crate) fn lstsq(a: &Mat<Complex64>, b: &[Complex64]) -> Vec<Complex64> {
    if a.ncols() == 0 {
        return Vec::new();
    }
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.col_piv_qr().solve_lstsq(&rhs);
    (0..a.ncols()).map(|i| x[(i, 0)]).collect()
}

pub(crate) fn to_complex(a: &Mat<f64>) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0))
}
