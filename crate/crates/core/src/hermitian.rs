//! Dense Hermitian kernels: eigendecomposition, generalized eigenproblem,
//! PSD square root, pseudoinverse and rank detection.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Absolute tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative threshold below which eigenvalues count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Relative threshold for clamping slightly negative eigenvalues.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of times a negative eigenvalue within tolerance was clamped to zero.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

/// A complex square matrix that equals its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    pub fn new(m: CMat) -> Result<Self, Error> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian (asymmetry {worst:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Symmetrizes `m` as (m + mᴴ)/2 without checking.
    pub fn symmetrized(m: &CMat) -> Self {
        Self((m + m.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let v = DVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&v))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(&self.0 * C64::new(k, 0.0))
    }
}

/// Eigenvalues in non-increasing order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenProfile {
    pub values: Vec<f64>,
    pub basis: CMat,
}

impl EigenProfile {
    /// Rebuilds basis · diag(values) · basisᴴ.
    pub fn reconstruct(&self) -> CMat {
        let mut scaled = self.basis.clone();
        for (k, &v) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(v);
        }
        scaled * self.basis.adjoint()
    }

    /// Number of values above the rank threshold.
    pub fn rank(&self) -> usize {
        numerical_rank(&self.values)
    }
}

/// Count of entries exceeding `RANK_TOL` times the largest magnitude.
pub fn numerical_rank(values: &[f64]) -> usize {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

pub fn eig_hermitian(a: &HermitianMatrix) -> EigenProfile {
    let n = a.dim();
    if n == 0 {
        return EigenProfile { values: vec![], basis: CMat::zeros(0, 0) };
    }
    let eig = a.0.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps the solver's column order inside degenerate subspaces
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let basis = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    EigenProfile { values, basis }
}

/// Generalized eigenpairs A v = ω B v with B positive definite.
///
/// Returned vectors are B-orthonormal (vᴴ B v = 1).
pub fn gevp(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<EigenProfile, Error> {
    let eb = eig_hermitian(b);
    let top = eb.values.first().copied().unwrap_or(0.0);
    let low = eb.values.last().copied().unwrap_or(0.0);
    if !(top > 0.0) || low <= 1e-12 * top {
        return Err(Error::Singular("gevp: B is not positive definite".into()));
    }
    let b_isqrt = spectral_map(&eb, |x| 1.0 / x.sqrt());
    let m = HermitianMatrix::symmetrized(&(&b_isqrt * a.matrix() * &b_isqrt));
    let em = eig_hermitian(&m);
    Ok(EigenProfile { values: em.values, basis: b_isqrt * em.basis })
}

/// U f(Λ) Uᴴ for a decomposition.
pub fn spectral_map(e: &EigenProfile, f: impl Fn(f64) -> f64) -> CMat {
    let mut scaled = e.basis.clone();
    for (k, &v) in e.values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(f(v));
    }
    scaled * e.basis.adjoint()
}

/// Clamps tiny negative eigenvalues; errors on genuinely negative ones.
pub fn psd_eigen(a: &HermitianMatrix) -> Result<EigenProfile, Error> {
    let mut e = eig_hermitian(a);
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in e.values.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_CLAMP_TOL * top {
                return Err(Error::NotPsd(*v));
            }
            CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
            *v = 0.0;
        }
    }
    Ok(e)
}

pub fn sqrt_psd(a: &HermitianMatrix) -> Result<HermitianMatrix, Error> {
    let e = psd_eigen(a)?;
    Ok(HermitianMatrix::symmetrized(&spectral_map(&e, f64::sqrt)))
}

/// Moore-Penrose pseudoinverse; singular values below 1e-12·σ_max are dropped.
pub fn pinv(a: &CMat) -> CMat {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMat::zeros(n, m);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let mut out = CMat::zeros(n, m);
    if smax == 0.0 {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-12 * smax {
            let v = vt.row(k).adjoint();
            let uh = u.column(k).adjoint();
            out += (v * uh) * C64::new(1.0 / s, 0.0);
        }
    }
    out
}

/// Pseudoinverse of a Hermitian PSD matrix through its eigendecomposition,
/// using the shared rank threshold.
pub fn pinv_psd(e: &EigenProfile) -> CMat {
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(*v));
    spectral_map(e, |v| if v > RANK_TOL * top && v > 0.0 { 1.0 / v } else { 0.0 })
}

/// Inverse of a Hermitian positive definite matrix.
pub fn inv_hpd(a: &CMat) -> Result<CMat, Error> {
    let c = a
        .clone()
        .cholesky()
        .filter(|c| c.l_dirty().diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re))
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(c.inverse())
}

/// Orthogonal projector onto the span of eigenvectors with nonzero eigenvalue.
pub fn range_projector(e: &EigenProfile) -> CMat {
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    spectral_map(e, |v| if top > 0.0 && v.abs() > RANK_TOL * top { 1.0 } else { 0.0 })
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real diagonal of a complex square matrix.
pub fn real_diagonal(a: &CMat) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, i)].re).collect()
}
