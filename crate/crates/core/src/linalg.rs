//! Small complex linear-algebra helpers shared by the rate engines.
//!
//! All covariance matrices handled here have the form `I + sum G G^H` and are
//! therefore Hermitian positive definite; log-determinants are taken through
//! their Cholesky factor and no determinant is ever formed directly.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, RsmaError};

pub type CMat = DMatrix<Complex64>;

pub const LN2: f64 = std::f64::consts::LN_2;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Squared Frobenius norm, i.e. `trace(A A^H)`.
pub fn fro2(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `acc += g g^H`.
pub fn add_gram(acc: &mut CMat, g: &CMat) {
    if g.ncols() == 0 {
        return;
    }
    acc.gemm(Complex64::new(1.0, 0.0), g, &g.adjoint(), Complex64::new(1.0, 0.0));
}

fn cholesky(m: &CMat) -> Result<Cholesky<Complex64, nalgebra::Dyn>> {
    let not_pd = || RsmaError::Numerical("covariance matrix is not positive definite".into());
    let ch = Cholesky::new(m.clone()).ok_or_else(not_pd)?;
    let l = ch.l_dirty();
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d.re > 0.0 && d.re.is_finite()) || d.im.abs() > 1e-12 * d.re {
            return Err(not_pd());
        }
    }
    Ok(ch)
}

/// `log2 det(A)` for Hermitian positive-definite `A`.
pub fn log2det_hpd(a: &CMat) -> Result<f64> {
    let ch = cholesky(a)?;
    let l = ch.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc / LN2)
}

/// `log2 det(I + G^H R^{-1} G)` for an `N x Q` effective channel `G` and an
/// `N x N` positive-definite noise-plus-interference covariance `R`.
pub fn logdet_rate(g: &CMat, r: &CMat) -> Result<f64> {
    if g.ncols() == 0 {
        return Ok(0.0);
    }
    let ch = cholesky(r)?;
    let x = ch
        .l_dirty()
        .solve_lower_triangular(g)
        .ok_or_else(|| RsmaError::Numerical("triangular solve failed".into()))?;
    let mut s = identity(g.ncols());
    s.gemm(Complex64::new(1.0, 0.0), &x.adjoint(), &x, Complex64::new(1.0, 0.0));
    log2det_hpd(&s)
}

/// Inverse of a Hermitian positive-definite matrix.
pub fn inv_hpd(a: &CMat) -> Result<CMat> {
    Ok(cholesky(a)?.inverse())
}

/// The `q` dominant left singular vectors of `a` as the columns of an
/// `nrows x q` matrix, ordered by decreasing singular value.
pub fn dominant_left_singular(a: &CMat, q: usize) -> Result<CMat> {
    let n = a.nrows();
    if q > n {
        return Err(RsmaError::Dimension(format!(
            "requested {q} singular vectors of a {n}-row matrix"
        )));
    }
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| RsmaError::Numerical("SVD did not converge".into()))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    let mut out = CMat::zeros(n, q);
    for (col, &i) in idx.iter().take(q).enumerate() {
        let mut v: DVector<Complex64> = u.column(i).into_owned();
        // Fix the phase so the largest-magnitude entry is real positive.
        let (pivot, _) = v
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |(bi, bm), (k, z)| {
                if z.norm() > bm + 1e-12 { (k, z.norm()) } else { (bi, bm) }
            });
        let p = v[pivot];
        if p.norm() > 0.0 {
            let phase = p.conj() / p.norm();
            v *= phase;
        }
        out.set_column(col, &v);
    }
    Ok(out)
}

/// Stack matrices side by side (all with the same number of rows).
pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}
