//! Small dense-matrix helpers on top of `faer`.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn zeros(n: usize) -> CMat {
    Mat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn adjoint(m: MatRef<'_, c64>) -> CMat {
    m.adjoint().to_owned()
}

/// ‖M − M†‖_F
pub fn hermitian_residual(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Tr(XY) without forming the product.
pub fn trace_of_product(x: MatRef<'_, c64>, y: MatRef<'_, c64>) -> c64 {
    let n = x.nrows();
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    acc
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigensolver)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
    let s = evd.S();
    let values = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

/// Spectral norm of a Hermitian matrix, max |λ|.
pub fn hermitian_norm2(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?
        .into_iter()
        .fold(0.0, |acc: f64, x| acc.max(x.abs())))
}

pub fn matvec(m: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    let n = m.nrows();
    let mut out = vec![c64::new(0.0, 0.0); n];
    for (j, &vj) in v.iter().enumerate() {
        if vj == c64::new(0.0, 0.0) {
            continue;
        }
        let col = m.col(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * vj;
        }
    }
    out
}

pub fn inner(x: &[c64], y: &[c64]) -> c64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[c64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn column(m: MatRef<'_, c64>, j: usize) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}
