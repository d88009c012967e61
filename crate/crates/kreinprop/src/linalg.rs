//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Builds a complex matrix from real entries in row-major order.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    assert_eq!(data.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

/// Block matrix [[a, b], [cc, d]].
pub fn block2(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut m = CMat::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(cc);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Full SVD (U, σ descending) through faer; nalgebra's SVD loses accuracy on
/// rank-deficient input.
fn svd_u(m: &CMat, want_u: bool) -> (Option<CMat>, Vec<f64>) {
    let fm = faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    let nan = || (None, vec![f64::NAN; m.nrows().min(m.ncols())]);
    if want_u {
        let Ok(svd) = fm.thin_svd() else { return nan() };
        let u = svd.U();
        let s: Vec<f64> = (0..u.ncols()).map(|k| svd.S()[k].re).collect();
        let uc = CMat::from_fn(u.nrows(), u.ncols(), |i, j| {
            let z = u[(i, j)];
            c(z.re, z.im)
        });
        (Some(uc), s)
    } else {
        match fm.singular_values() {
            Ok(s) => (None, s),
            Err(_) => nan(),
        }
    }
}

/// Singular values, largest first.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = svd_u(m, false).1;
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn min_singular(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn herm_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn herm_residual(m: &CMat) -> f64 {
    op_norm(&(m - m.adjoint()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let e = SymmetricEigen::new(herm_part(m));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let mut v = CMat::zeros(n, n);
    for (col, &k) in idx.iter().enumerate() {
        v.set_column(col, &e.eigenvectors.column(k));
    }
    (vals, v)
}

pub fn eig_range_h(m: &CMat) -> (f64, f64) {
    let (v, _) = eigh(m);
    match (v.first(), v.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    }
}

/// f(M) for Hermitian M through its eigen-decomposition.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, v) = eigh(m);
    let d = CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x), 0.0))));
    &v * d * v.adjoint()
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    let inv = m.clone().lu().try_inverse()?;
    is_finite(&inv).then_some(inv)
}

pub fn inverse_or(m: &CMat, what: &str) -> Result<CMat> {
    inverse(m).ok_or_else(|| Error::ContractViolation(format!("{what} is numerically singular")))
}

pub fn solve(a: &CMat, b: &CMat) -> Option<CMat> {
    let x = a.clone().lu().solve(b)?;
    is_finite(&x).then_some(x)
}

pub fn det(m: &CMat) -> C64 {
    if m.nrows() == 0 {
        return c(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Lower Cholesky factor L with h = L L†, or `None` if `h` is not positive definite.
pub fn cholesky(h: &CMat) -> Option<CMat> {
    Cholesky::new(herm_part(h)).map(|ch| ch.l())
}

/// Orthonormal basis for the column range of `m` (singular values above `rel * σ_max`).
pub fn orth(m: &CMat, rel: f64) -> CMat {
    let n = m.nrows();
    if m.ncols() == 0 {
        return CMat::zeros(n, 0);
    }
    let (u, sv) = svd_u(m, true);
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..sv.len()).filter(|&k| smax > 0.0 && sv[k] > rel * smax).collect();
    let Some(u) = u else { return CMat::zeros(n, 0) };
    let mut out = CMat::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        out.set_column(col, &u.column(k));
    }
    out
}

/// Orthonormal basis of the standard orthogonal complement of an orthonormal basis.
pub fn orth_complement(q: &CMat) -> CMat {
    let n = q.nrows();
    let p = eye(n) - q * q.adjoint();
    let (vals, v) = eigh(&p);
    let keep: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.5).collect();
    let mut out = CMat::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        out.set_column(col, &v.column(k));
    }
    out
}

/// Projection onto `range` along `kernel`, solved from the stacked basis [range | kernel].
///
/// Returns the projection and the condition number of the stacked matrix.
pub fn projection_along(range: &CMat, kernel: &CMat) -> Result<(CMat, f64)> {
    let n = range.nrows();
    let (k, l) = (range.ncols(), kernel.ncols());
    if k + l != n || kernel.nrows() != n {
        return Err(Error::Input(format!(
            "projection_along: dimensions {k} + {l} do not add up to {n}"
        )));
    }
    let mut stacked = CMat::zeros(n, n);
    stacked.view_mut((0, 0), (n, k)).copy_from(range);
    stacked.view_mut((0, k), (n, l)).copy_from(kernel);
    let sv = singular_values(&stacked);
    let smin = sv.last().copied().unwrap_or(0.0);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smin <= 1e-13 * smax.max(1.0) {
        return Err(Error::ComplementarityFailure { smallest: smin });
    }
    let mut sel = CMat::zeros(n, n);
    for d in 0..k {
        sel[(d, d)] = c(1.0, 0.0);
    }
    let inv = inverse_or(&stacked, "stacked basis")?;
    Ok((&stacked * sel * inv, smax / smin))
}

/// Dense matrix as `{rows, cols, re, im}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixJson { rows, cols, re, im }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Input(format!(
                "matrix json: expected {n} entries, got re={} im={}",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            c(self.re[i * self.cols + j], self.im[i * self.cols + j])
        }))
    }
}

/// Serde adapter so report structs can hold `CMat` fields directly.
pub mod matrix_serde {
    use super::{CMat, MatrixJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        j.to_matrix().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_along_axes() {
        let r = from_real(2, 1, &[1.0, 0.0]);
        let k = from_real(2, 1, &[1.0, 1.0]);
        let (p, cond) = projection_along(&r, &k).unwrap();
        // p e1 = e1, p (e1+e2) = 0
        assert!((p[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((p[(0, 1)] + c(1.0, 0.0)).norm() < 1e-14);
        assert!(p[(1, 0)].norm() < 1e-14 && p[(1, 1)].norm() < 1e-14);
        assert!(cond > 1.0);
    }

    #[test]
    fn collinear_stack_is_rejected() {
        let r = from_real(2, 1, &[1.0, 0.0]);
        assert!(matches!(
            projection_along(&r, &r),
            Err(Error::ComplementarityFailure { .. })
        ));
    }

    #[test]
    fn orth_drops_dependent_columns() {
        let m = from_real(3, 3, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0]);
        let q = orth(&m, 1e-12);
        assert_eq!(q.ncols(), 2);
        assert!((q.adjoint() * &q - eye(2)).norm() < 1e-13);
        let qc = orth_complement(&q);
        assert_eq!(qc.ncols(), 1);
        assert!((q.adjoint() * &qc).norm() < 1e-13);
    }

    #[test]
    fn nearly_real_rank_one() {
        let eps = 1.3877787807814457e-17;
        let m = CMat::from_row_slice(2, 2, &[c(0.5, eps), c(0.25, 0.0), c(1.0, 0.0), c(0.5, eps)]);
        let sv = singular_values(&m);
        assert!((sv[0] - 1.25).abs() < 1e-14 && sv[1] < 1e-14);
        let q = orth(&m, 1e-8);
        assert_eq!(q.ncols(), 1);
        assert!((&q * q.adjoint() * &m - &m).norm() < 1e-14);
        let r = from_real(2, 2, &[0.5, 0.2499999999999956, 0.9999999999999823, 0.5]);
        let q = orth(&r, 1e-8);
        assert!((&q * q.adjoint() * &r - &r).norm() < 1e-14);
    }

    #[test]
    fn matrix_json_round_trip() {
        let m = CMat::from_fn(2, 3, |i, j| c(i as f64 + 0.1, j as f64 - 1.0 / 3.0));
        let j = MatrixJson::from(&m);
        assert_eq!(j.re[1], m[(0, 1)].re);
        let back: MatrixJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn herm_fn_square_root() {
        let h = from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = herm_fn(&h, f64::sqrt);
        assert!((&r * &r - h).norm() < 1e-13);
    }
}
