//! Small dense complex linear-algebra helpers shared by the estimators.
//!
//! Every matrix here is tiny (at most a few tens of rows), so the helpers
//! favour clarity over blocking. Inverses are never formed explicitly except
//! through solves against a Cholesky or LU factorization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative eigenvalue threshold below which a Hermitian matrix is treated as
/// not positive definite.
pub const PD_REL_EPS: f64 = 1e-12;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `(m + mᴴ) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Column `i` of the returned matrix is the unit eigenvector belonging to
/// the `i`-th returned eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Lower Cholesky factor of a Hermitian matrix, or `None` when a pivot is
/// not strictly positive.
pub fn cholesky_lower(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return None;
        }
        let d = pivot.sqrt();
        l[(j, j)] = c(d);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᴴ x = rhs` given the lower factor `L`.
fn cholesky_solve(l: &CMatrix, rhs: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut x = rhs.clone();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Log-determinant of a Hermitian positive definite matrix.
///
/// Cholesky first; when the factorization breaks down the eigenvalues are
/// inspected and the matrix is rejected if any of them is at or below
/// `PD_REL_EPS` times the largest.
pub fn ln_det_hpd(m: &CMatrix, what: &str) -> Result<f64> {
    if let Some(l) = cholesky_lower(m) {
        let ld: f64 = (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0;
        if ld.is_finite() {
            return Ok(ld);
        }
    }
    let eig = hermitian_eigenvalues(m);
    let max = eig.first().copied().unwrap_or(0.0);
    let min = eig.last().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= PD_REL_EPS * max {
        return Err(Error::NumericDegeneracy(format!(
            "{what} is not positive definite (eigenvalue range [{min:.3e}, {max:.3e}])"
        )));
    }
    Ok(eig.iter().map(|l| l.ln()).sum())
}

/// Solve `m x = rhs` for Hermitian positive definite `m`.
pub fn solve_hpd(m: &CMatrix, rhs: &CMatrix, what: &str) -> Result<CMatrix> {
    if let Some(l) = cholesky_lower(m) {
        return Ok(cholesky_solve(&l, rhs));
    }
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::NumericDegeneracy(format!("{what} is singular")))
}

/// Spectral condition number of a Hermitian positive semidefinite matrix.
pub fn condition_number_hpd(m: &CMatrix) -> f64 {
    let eig = hermitian_eigenvalues(m);
    let max = eig.first().copied().unwrap_or(0.0);
    let min = eig.last().copied().unwrap_or(0.0);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Clip negative eigenvalues at zero and re-symmetrize.
pub fn psd_project(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lambda) in values.iter().enumerate() {
        if lambda > 0.0 {
            let u = vectors.column(i);
            out += (&u * u.adjoint()) * c(lambda);
        }
    }
    symmetrize(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(1.0), Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5), c(3.0)],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0] > vals[1]);
        for i in 0..2 {
            let u = vecs.column(i);
            let mu = &m * u;
            for r in 0..2 {
                assert!((mu[r] - u[r] * vals[i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ln_det_matches_product_of_diagonal() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(3.0), c(0.5)]));
        assert!((ln_det_hpd(&m, "m").unwrap() - 3.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_det_rejects_singular() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(matches!(ln_det_hpd(&m, "m"), Err(Error::NumericDegeneracy(_))));
    }

    #[test]
    fn cholesky_solve_matches_product() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c(4.0), Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0), c(3.0)],
        );
        let l = cholesky_lower(&m).unwrap();
        assert!((&l * l.adjoint() - &m).norm() < 1e-14);
        let rhs = CMatrix::from_row_slice(2, 1, &[c(1.0), Complex64::new(0.0, 2.0)]);
        let x = solve_hpd(&m, &rhs, "m").unwrap();
        assert!((&m * x - rhs).norm() < 1e-14);
        let indefinite = CMatrix::from_row_slice(2, 2, &[c(1.0), c(3.0), c(3.0), c(1.0)]);
        assert!(cholesky_lower(&indefinite).is_none());
    }

    #[test]
    fn psd_projection_clips_negative_part() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(2.0), c(-1.0)]));
        let p = psd_project(&m);
        assert!((p[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);
    }
}
