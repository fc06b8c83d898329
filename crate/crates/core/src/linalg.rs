//! Dense complex linear algebra for the small sizes used throughout the crate.
//!
//! Vectors and matrices are plain `nalgebra` dynamic types over `Complex<f64>`.
//! Rank decisions are always relative to the largest singular value.

use nalgebra as na;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CVector = na::DVector<C64>;
pub type CMatrix = na::DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Threshold policy shared by every numerical decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rank_rel: f64,
    pub psd_rel: f64,
    pub residual: f64,
    pub dedup: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_rel: 1e-9,
            psd_rel: 1e-10,
            residual: 1e-8,
            dedup: 1e-6,
        }
    }
}

impl Tolerance {
    pub fn validated(self) -> Result<Self> {
        let all = [self.rank_rel, self.psd_rel, self.residual, self.dedup];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(self)
        } else {
            Err(Error::Input(format!("tolerances must be positive: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    First,
    Second,
}

pub fn cvec(entries: &[C64]) -> CVector {
    CVector::from_column_slice(entries)
}

pub fn rvec(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| re(x)))
}

pub fn basis(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = ONE;
    v
}

/// `kron(v, w)[m*i + j] = v[i] * w[j]`, zero-based.
pub fn kron(v: &CVector, w: &CVector) -> CVector {
    let m = w.len();
    CVector::from_fn(v.len() * m, |k, _| v[k / m] * w[k % m])
}

pub fn kron_mat(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Columns stacked into a matrix.
pub fn hstack(cols: &[CVector]) -> CMatrix {
    if cols.is_empty() {
        return CMatrix::zeros(0, 0);
    }
    CMatrix::from_columns(cols)
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let scale = frobenius(m);
    if scale == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / scale
}

/// Partial transpose of an `n*m` square matrix in the chosen tensor factor.
pub fn partial_transpose(mat: &CMatrix, dims: (usize, usize), sub: Subsystem) -> Result<CMatrix> {
    let (n, m) = dims;
    let d = n * m;
    if mat.nrows() != d || mat.ncols() != d {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for dims {n}x{m}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    Ok(CMatrix::from_fn(d, d, |row, col| {
        let (i, j) = (row / m, row % m);
        let (k, l) = (col / m, col % m);
        match sub {
            Subsystem::First => mat[(k * m + j, i * m + l)],
            Subsystem::Second => mat[(i * m + l, k * m + j)],
        }
    }))
}

#[derive(Clone, Debug)]
pub struct Eigen {
    /// ascending
    pub values: Vec<f64>,
    /// columns match `values`
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(mat: &CMatrix, tol: &Tolerance) -> Result<Eigen> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::Dimension("eigendecomposition needs a square matrix".into()));
    }
    let dev = hermitian_deviation(mat);
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (mat + mat.adjoint()).scale(0.5);
    let eig = na::SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<CVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    let vectors = hstack(&cols);
    let lam = CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| re(x)),
    ));
    let resid = frobenius(&(&sym * &vectors - &vectors * lam));
    if resid > tol.residual * frobenius(&sym).max(1.0) {
        return Err(Error::Numerical(format!("eigen residual {resid:.3e}")));
    }
    Ok(Eigen { values, vectors })
}

/// SVD whose right singular vectors always span the whole domain (wide
/// inputs are padded with zero rows). Singular values are descending and
/// there are exactly `ncols` of them; `v` holds right singular vectors as
/// columns.
pub struct FullSvd {
    pub values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

pub fn full_svd(mat: &CMatrix) -> FullSvd {
    let (r, c) = mat.shape();
    let padded = if r < c {
        let mut sq = CMatrix::zeros(c, c);
        sq.view_mut((0, 0), (r, c)).copy_from(mat);
        sq
    } else {
        mat.clone()
    };
    let svd = na::SVD::new(padded, true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let ucols: Vec<CVector> = order.iter().map(|&k| u.column(k).rows(0, r).into_owned()).collect();
    let vcols: Vec<CVector> = order.iter().map(|&k| vt.row(k).adjoint()).collect();
    FullSvd {
        values,
        u: hstack(&ucols),
        v: hstack(&vcols),
    }
}

pub fn singular_values(mat: &CMatrix) -> Vec<f64> {
    if mat.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn rank_from_values(values: &[f64], shape: (usize, usize), tol: &Tolerance) -> usize {
    let smax = values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = tol.rank_rel * smax * shape.0.max(shape.1) as f64;
    values.iter().filter(|&&s| s > cut).count()
}

pub fn numerical_rank(mat: &CMatrix, tol: &Tolerance) -> usize {
    if mat.is_empty() {
        return 0;
    }
    rank_from_values(&singular_values(mat), mat.shape(), tol)
}

/// Orthonormal basis (columns) of the null space.
pub fn null_space(mat: &CMatrix, tol: &Tolerance) -> CMatrix {
    let (r, c) = mat.shape();
    if r == 0 {
        return CMatrix::identity(c, c);
    }
    let svd = full_svd(mat);
    let rank = rank_from_values(&svd.values[..r.min(c)], (r, c), tol);
    svd.v.columns(rank, c - rank).into_owned()
}

/// Right singular vector belonging to the smallest singular value, plus that
/// value relative to the largest one.
pub fn smallest_right_singular(mat: &CMatrix) -> (CVector, f64) {
    let c = mat.ncols();
    let svd = full_svd(mat);
    let smax = svd.values[0];
    let k = c - 1;
    let smin = if k < mat.nrows() { svd.values[k] } else { 0.0 };
    let rel = if smax > 0.0 { smin / smax } else { 0.0 };
    (svd.v.column(k).into_owned(), rel)
}

/// Orthonormal basis of the column space.
pub fn column_space(mat: &CMatrix, tol: &Tolerance) -> CMatrix {
    let (r, c) = mat.shape();
    if c == 0 {
        return CMatrix::zeros(r, 0);
    }
    let svd = full_svd(mat);
    let rank = rank_from_values(&svd.values[..r.min(c)], (r, c), tol);
    svd.u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the column span.
pub fn orthogonal_complement(mat: &CMatrix, tol: &Tolerance) -> CMatrix {
    null_space(&mat.adjoint(), tol)
}

/// Distance of `x` from the column span of `basis`, relative to `‖x‖`.
pub fn span_residual(basis: &CMatrix, x: &CVector, tol: &Tolerance) -> f64 {
    let q = column_space(basis, tol);
    let proj = &q * (q.adjoint() * x);
    let nx = x.norm();
    if nx == 0.0 {
        return 0.0;
    }
    (x - proj).norm() / nx
}

pub fn det3(a: &CVector, b: &CVector, c: &CVector) -> C64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Bilinear cross product (no conjugation).
pub fn cross3(a: &CVector, b: &CVector) -> CVector {
    cvec(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Principal cube root.
pub fn cbrt(z: C64) -> C64 {
    if z == ZERO {
        return ZERO;
    }
    C64::from_polar(z.norm().cbrt(), z.arg() / 3.0)
}

/// Rescale a 3x3 matrix to unit determinant using the principal cube root.
pub fn sl_normalize(a: &CMatrix) -> Result<CMatrix> {
    if a.shape() != (3, 3) {
        return Err(Error::Dimension("sl_normalize expects 3x3".into()));
    }
    let d = a.determinant();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 || d.norm() <= 1e-14 * scale.powi(3) {
        return Err(Error::Singular);
    }
    Ok(a * (ONE / cbrt(d)))
}

/// Fubini–Study angle between two rays.
pub fn fubini_study(x: &CVector, y: &CVector) -> f64 {
    let den = x.norm() * y.norm();
    if den == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (x.dotc(y).norm() / den).min(1.0).acos()
}

/// Scale so that the first entry with modulus above a tenth of the largest is one.
pub fn projective_normalize(v: &CVector) -> CVector {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return v.clone();
    }
    let lead = v
        .iter()
        .find(|z| z.norm() > 0.1 * vmax)
        .copied()
        .unwrap_or(ONE);
    v / lead
}

/// Condition number in the 2-norm.
pub fn condition_number(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Moore–Penrose pseudo-inverse of a Hermitian PSD matrix restricted to its support.
pub fn support_pinv(mat: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = hermitian_eigen(mat, tol)?;
    let lmax = eig.values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = tol.rank_rel * lmax * mat.nrows() as f64;
    let mut out = CMatrix::zeros(mat.nrows(), mat.ncols());
    for (k, &l) in eig.values.iter().enumerate() {
        if l.abs() > cut {
            let v = eig.vectors.column(k).into_owned();
            out += projector(&v) * re(1.0 / l);
        }
    }
    Ok(out)
}

pub fn to_real_if_close(z: C64, tol: f64) -> Option<f64> {
    if z.im.abs() <= tol * (1.0 + z.re.abs()) {
        Some(z.re)
    } else {
        None
    }
}
