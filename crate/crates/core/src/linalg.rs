//! Small dense helpers over nalgebra for the n×n problems the toolkit solves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Numerical singularity threshold on σ_min / σ_max.
pub const SINGULAR_RATIO: f64 = 1e-14;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn cmatrix_from_rows(rows: &[Vec<Complex64>]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn cvector(v: &[Complex64]) -> CVector {
    DVector::from_column_slice(v)
}

pub fn to_real_complex(g: &DMatrix<f64>) -> CMatrix {
    g.map(|v| Complex64::new(v, 0.0))
}

/// σ_min / σ_max, or 0 for a zero or non-finite matrix.
pub fn singular_value_ratio(m: &CMatrix) -> f64 {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

fn check_regular(m: &CMatrix) -> Result<()> {
    let ratio = singular_value_ratio(m);
    if ratio < SINGULAR_RATIO {
        return Err(Error::SingularJacobian { ratio });
    }
    Ok(())
}

/// Solve `m x = rhs` by full-pivot LU after a singular-value check.
pub fn solve(m: &CMatrix, rhs: &CVector) -> Result<CVector> {
    check_regular(m)?;
    m.clone()
        .full_piv_lu()
        .solve(rhs)
        .ok_or(Error::SingularJacobian { ratio: 0.0 })
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    check_regular(m)?;
    m.clone().full_piv_lu().try_inverse().ok_or(Error::SingularJacobian { ratio: 0.0 })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn hermitian_max_eigenvalue(m: CMatrix) -> f64 {
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.max()
}

/// `w* G w` for a real symmetric `G`.
pub fn quad_form(g: &DMatrix<f64>, w: &[Complex64]) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * (w[i].conj() * w[j]).re;
        }
    }
    acc.max(0.0)
}

/// Moore–Penrose pseudo-inverse of a real symmetric PSD matrix; eigenvalues
/// below `rel_tol · λ_max` count as zero.
pub fn symmetric_pseudo_inverse(g: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let n = g.nrows();
    let mut out = DMatrix::zeros(n, n);
    if max <= 0.0 {
        return out;
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > rel_tol * max {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
