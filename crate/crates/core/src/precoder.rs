//! Precoder design for prescribed pilots.
//!
//! For fixed pilots the reachable SNR profiles form a simplex whose vertices
//! follow from the generalized eigenvalues ω of (R̂, I/μ_Q + R̃). The
//! precoder problem becomes an ascent over barycentric weights ν on that
//! simplex, followed by recovery of Q from the generalized eigenvectors.

use crate::channel::{
    estimation_covariances, estimate_variances, ChannelCovariance, GramMatrix, GramRole,
};
use crate::hermitian::{eig_hermitian, frobenius, gevp, numerical_rank, pinv, CMat, HermitianMatrix, C64};
use crate::solver::{project_capped_simplex, projected_ascent, AscentOptions};
use crate::utility::{Utility, UtilityValue};
use crate::Error;

/// X ↦ A X Aᴴ / (1 + tr(B X)).
#[derive(Clone, Debug)]
pub struct LinearFractionalMap {
    pub a: CMat,
    pub b: HermitianMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvertMode {
    FullColumnRank,
    FullRowRank,
}

impl LinearFractionalMap {
    pub fn new(a: CMat, b: HermitianMatrix) -> Result<Self, Error> {
        if b.dim() != a.ncols() {
            return Err(Error::Validation(format!("B is {}x{}, A has {} columns", b.dim(), b.dim(), a.ncols())));
        }
        Ok(Self { a, b })
    }

    pub fn denominator(&self, x: &HermitianMatrix) -> f64 {
        1.0 + (self.b.matrix() * x.matrix()).trace().re
    }

    pub fn apply(&self, x: &HermitianMatrix) -> Result<HermitianMatrix, Error> {
        let d = self.denominator(x);
        if d <= 1e-12 {
            return Err(Error::Denominator(d));
        }
        let y = &self.a * x.matrix() * self.a.adjoint() * C64::new(1.0 / d, 0.0);
        Ok(HermitianMatrix::symmetrized(&y))
    }

    /// Pre-image of `y`, itself a linear fractional map of `y`.
    pub fn invert(&self, y: &HermitianMatrix, mode: InvertMode) -> Result<HermitianMatrix, Error> {
        match mode {
            InvertMode::FullColumnRank => {
                let ah = self.a.adjoint();
                let gram = &ah * &self.a;
                let a_sharp = gram
                    .try_inverse()
                    .ok_or_else(|| Error::Singular("A lacks full column rank".into()))?
                    * ah;
                self.inverse_map(&a_sharp)?.apply_checked(y)
            }
            InvertMode::FullRowRank => {
                // X = Aᴴ X̂ A with X̂ the pre-image under (A Aᴴ, A B Aᴴ)
                let a_hat = &self.a * self.a.adjoint();
                let b_hat = HermitianMatrix::symmetrized(&(&self.a * self.b.matrix() * self.a.adjoint()));
                let inner = LinearFractionalMap { a: a_hat, b: b_hat };
                let x_hat = inner.invert(y, InvertMode::FullColumnRank)?;
                Ok(HermitianMatrix::symmetrized(&(self.a.adjoint() * x_hat.matrix() * &self.a)))
            }
        }
    }

    fn inverse_map(&self, a_sharp: &CMat) -> Result<LinearFractionalMap, Error> {
        let b = -(a_sharp.adjoint() * self.b.matrix() * a_sharp);
        Ok(LinearFractionalMap { a: a_sharp.clone(), b: HermitianMatrix::symmetrized(&b) })
    }

    fn apply_checked(&self, y: &HermitianMatrix) -> Result<HermitianMatrix, Error> {
        let d = self.denominator(y);
        if d <= 1e-12 {
            return Err(Error::Denominator(d));
        }
        self.apply(y)
    }

    /// β with φ(αX₁ + (1−α)X₂) = βφ(X₁) + (1−β)φ(X₂).
    pub fn segment_beta(&self, x1: &HermitianMatrix, x2: &HermitianMatrix, alpha: f64) -> f64 {
        let t1 = self.denominator(x1) - 1.0;
        let t2 = self.denominator(x2) - 1.0;
        alpha * (1.0 + t1) / (1.0 + alpha * t1 + (1.0 - alpha) * t2)
    }
}

/// Reachable sorted SNR profiles for fixed pilots and a transmit budget.
#[derive(Clone, Debug)]
pub struct SimplexRegion {
    /// Positive generalized eigenvalues, non-increasing.
    pub omegas: Vec<f64>,
    /// σ⁽⁰⁾ = 0, …, σ⁽ʳ⁾, each of length N_T.
    pub vertices: Vec<Vec<f64>>,
    /// Generalized eigenvectors x_i with x_iᴴ(I/μ_Q + R̃)x_j = δ_ij.
    pub basis: CMat,
    pub r_p: usize,
    pub mu_q: f64,
    /// x_iᴴ R̃ x_i.
    pub noise_weights: Vec<f64>,
    /// R̂ and R̃ commute, so the recovered precoder lies in range(R̂).
    pub aligned: bool,
}

/// 1 / Σ_{i<n} 1/ω_i.
fn harmonic_prefix(omegas: &[f64], n: usize) -> f64 {
    1.0 / omegas[..n].iter().map(|w| 1.0 / w).sum::<f64>()
}

fn simplex_vertices(omegas: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]];
    for n in 1..=omegas.len() {
        let h = harmonic_prefix(omegas, n);
        let mut v = vec![0.0; dim];
        v[..n].iter_mut().for_each(|x| *x = h);
        out.push(v);
    }
    out
}

/// Profile Σ ν_n σ⁽ⁿ⁾ restricted to the first r entries.
fn profile_from_nu(omegas: &[f64], nu: &[f64]) -> Vec<f64> {
    let r = omegas.len();
    let mut s = vec![0.0; r];
    let mut tail = 0.0;
    for n in (1..=r).rev() {
        tail += nu[n - 1] * harmonic_prefix(omegas, n);
        s[n - 1] = tail;
    }
    s
}

/// ν_n = (s_n − s_{n+1}) / H_n for a sorted profile.
fn nu_from_profile(omegas: &[f64], s: &[f64]) -> Vec<f64> {
    let r = omegas.len();
    (0..r)
        .map(|i| {
            let next = if i + 1 < r { s[i + 1] } else { 0.0 };
            (s[i] - next) / harmonic_prefix(omegas, i + 1)
        })
        .collect()
}

impl SimplexRegion {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn profile_at(&self, nu: &[f64]) -> Vec<f64> {
        let mut s = profile_from_nu(&self.omegas, nu);
        s.resize(self.dim(), 0.0);
        s
    }

    /// Barycentric weights of a non-increasing profile (first r_p entries).
    pub fn barycentric(&self, s: &[f64]) -> Vec<f64> {
        nu_from_profile(&self.omegas, &s[..self.r_p])
    }

    /// Largest violation of the simplex description for a sorted profile:
    /// negative weights, weight sum above one, or mass beyond rank r_p,
    /// relative to the largest ω.
    pub fn membership_residual(&self, s: &[f64]) -> f64 {
        let scale = self.omegas.first().copied().unwrap_or(1.0).max(1e-300);
        let beyond = s[self.r_p..].iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        if self.r_p == 0 {
            return beyond;
        }
        let nu = self.barycentric(s);
        let neg = nu.iter().fold(0.0f64, |m, v| m.max(-v));
        let excess = (nu.iter().sum::<f64>() - 1.0).max(0.0);
        neg.max(excess).max(beyond)
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        self.membership_residual(s) <= tol
    }

    /// Precoder whose SNR profile is `s_bar` (sorted, length r_p).
    pub fn recover_q(&self, s_bar: &[f64]) -> Result<HermitianMatrix, Error> {
        let n = self.dim();
        if self.r_p == 0 {
            return Ok(HermitianMatrix::zeros(n));
        }
        let t: Vec<f64> = s_bar.iter().zip(&self.omegas).map(|(s, w)| s / w).collect();
        let denom = 1.0 - t.iter().zip(&self.noise_weights).map(|(t, a)| t * a).sum::<f64>();
        if denom <= 1e-12 {
            return Err(Error::Denominator(denom));
        }
        let mut xs = self.basis.clone();
        for (k, tk) in t.iter().enumerate() {
            xs.column_mut(k).scale_mut((tk.max(0.0) / denom).sqrt());
        }
        Ok(HermitianMatrix::symmetrized(&(&xs * xs.adjoint())))
    }
}

pub fn simplex_region(p: &GramMatrix, r: &ChannelCovariance, mu_q: f64) -> Result<SimplexRegion, Error> {
    if !(mu_q > 0.0) {
        return Err(Error::Validation("mu_q must be positive".into()));
    }
    let n = r.dim();
    let cov = estimation_covariances(p, r);
    let rank_p = eig_hermitian(p.matrix()).rank();
    let mut c = cov.r_tilde.matrix().clone();
    for i in 0..n {
        c[(i, i)] += C64::new(1.0 / mu_q, 0.0);
    }
    let c = HermitianMatrix::symmetrized(&c);
    let eg = gevp(&cov.r_hat, &c)?;
    let r_p = numerical_rank(&eg.values).min(rank_p);
    let omegas: Vec<f64> = eg.values[..r_p].to_vec();
    let basis = eg.basis.columns(0, r_p).into_owned();
    let noise_weights = (0..r_p)
        .map(|k| {
            let x = basis.column(k);
            (x.adjoint() * cov.r_tilde.matrix() * x)[(0, 0)].re
        })
        .collect();
    let comm = cov.r_hat.matrix() * cov.r_tilde.matrix() - cov.r_tilde.matrix() * cov.r_hat.matrix();
    let aligned = frobenius(&comm) <= 1e-10 * frobenius(cov.r_hat.matrix()).max(1e-300) * frobenius(cov.r_tilde.matrix());
    Ok(SimplexRegion { vertices: simplex_vertices(&omegas, n), omegas, basis, r_p, mu_q, noise_weights, aligned })
}

/// Ascent over barycentric weights; `eval`/`grad` act on the profile in ω order.
fn maximize_over_simplex(
    omegas: &[f64],
    eval: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    starts: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>, f64) {
    let r = omegas.len();
    let h: Vec<f64> = (1..=r).map(|n| harmonic_prefix(omegas, n)).collect();
    let f = |nu: &[f64]| eval(&profile_from_nu(omegas, nu));
    let g = |nu: &[f64]| {
        let gs = grad(&profile_from_nu(omegas, nu))?;
        let mut acc = 0.0;
        let mut out = vec![0.0; r];
        for n in 0..r {
            acc += gs[n];
            out[n] = h[n] * acc;
        }
        Some(out)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let res = projected_ascent(start.clone(), f, g, |y| project_capped_simplex(y, 1.0), AscentOptions::default());
        if best.as_ref().is_none_or(|b| res.value > b.1 || !b.1.is_finite()) {
            best = Some((res.x, res.value));
        }
    }
    let (nu, value) = best.expect("at least one start");
    let s = profile_from_nu(omegas, &nu);
    (nu, s, value)
}

fn default_starts(r: usize, concave: bool, warm: Option<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut starts = Vec::new();
    if let Some(w) = warm {
        starts.push(w);
    }
    if !concave || starts.is_empty() {
        starts.push(vec![1.0 / r as f64; r]);
    }
    if !concave {
        for n in 0..r {
            let mut e = vec![0.0; r];
            e[n] = 1.0;
            starts.push(e);
        }
    }
    starts
}

#[derive(Clone, Debug)]
pub struct PrecoderSolution {
    pub q: GramMatrix,
    /// Sorted SNR profile at the optimum.
    pub profile: Vec<f64>,
    pub value: UtilityValue,
    pub nu: Vec<f64>,
    pub region: SimplexRegion,
    /// Eigenbasis alignment failed; only vertex optimality of the basis is assured.
    pub vertex_optimal_only: bool,
    /// The utility is not concave and the result comes from multi-start ascent.
    pub multistart: bool,
}

pub fn optimize_precoder(
    p: &GramMatrix,
    r: &ChannelCovariance,
    mu_q: f64,
    utility: &Utility,
) -> Result<PrecoderSolution, Error> {
    let region = simplex_region(p, r, mu_q)?;
    let n = r.dim();
    let concave = utility.kind().is_concave();
    if region.r_p == 0 {
        return Ok(PrecoderSolution {
            q: GramMatrix::new(HermitianMatrix::zeros(n), GramRole::Transmit, mu_q)?,
            profile: vec![0.0; n],
            value: utility.evaluate(&vec![0.0; n]),
            nu: vec![],
            vertex_optimal_only: !region.aligned,
            multistart: !concave,
            region,
        });
    }
    let pad = |s: &[f64]| {
        let mut v = s.to_vec();
        v.resize(n, 0.0);
        v
    };
    let eval = |s: &[f64]| utility.evaluate_modes(&pad(s)).value;
    let grad = |s: &[f64]| utility.gradient_modes(&pad(s)).map(|g| g[..s.len()].to_vec());
    let starts = default_starts(region.r_p, concave, None);
    let (nu, s_bar, _) = maximize_over_simplex(&region.omegas, &eval, &grad, &starts);
    let q = region.recover_q(&s_bar)?;
    let q = GramMatrix::new(q, GramRole::Transmit, mu_q * (1.0 + 1e-12) + 1e-12)?;
    let profile = pad(&s_bar);
    Ok(PrecoderSolution {
        value: utility.evaluate(&profile),
        q,
        profile,
        nu,
        vertex_optimal_only: !region.aligned,
        multistart: !concave,
        region,
    })
}

/// Precoder eigenvalues for pilots diagonal in the channel eigenbasis.
#[derive(Clone, Debug)]
pub struct VectorPrecoder {
    pub q: Vec<f64>,
    /// SNR per channel mode.
    pub s: Vec<f64>,
    pub value: f64,
}

/// Vector-domain precoder optimization with budget Σq ≤ `mu_q`.
///
/// `warm` is an incumbent transmit allocation; the result is never worse
/// than it on the frozen samples.
pub fn optimize_precoder_vec(
    p: &[f64],
    r: &[f64],
    mu_q: f64,
    utility: &Utility,
    warm: Option<&[f64]>,
) -> VectorPrecoder {
    let n = r.len();
    let (r_hat, r_tilde) = estimate_variances(p, r);
    let mut active: Vec<usize> = (0..n).filter(|&i| r_hat[i] > 0.0).collect();
    let omega = |i: usize| r_hat[i] / (1.0 / mu_q + r_tilde[i]);
    active.sort_by(|&i, &j| omega(j).total_cmp(&omega(i)));
    if active.is_empty() || !(mu_q > 0.0) {
        let s = vec![0.0; n];
        return VectorPrecoder { q: vec![0.0; n], value: utility.evaluate_modes(&s).value, s };
    }
    let omegas: Vec<f64> = active.iter().map(|&i| omega(i)).collect();
    let to_modes = |s_bar: &[f64]| {
        let mut s = vec![0.0; n];
        for (k, &i) in active.iter().enumerate() {
            s[i] = s_bar[k];
        }
        s
    };
    let eval = |s_bar: &[f64]| utility.evaluate_modes(&to_modes(s_bar)).value;
    let grad = |s_bar: &[f64]| {
        let g = utility.gradient_modes(&to_modes(s_bar))?;
        Some(active.iter().map(|&i| g[i]).collect())
    };
    let warm_nu = warm.map(|q0| {
        let s0 = crate::channel::snr_profile_vec(p, q0, r);
        let mut sorted: Vec<f64> = active.iter().map(|&i| s0[i]).collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let nu = nu_from_profile(&omegas, &sorted);
        project_capped_simplex(&nu, 1.0)
    });
    let starts = default_starts(active.len(), utility.kind().is_concave(), warm_nu);
    let (_, s_bar, _) = maximize_over_simplex(&omegas, &eval, &grad, &starts);
    // q_i = t_i / ((1/μ + r̃_i)(1 − Σ t_j r̃_j/(1/μ + r̃_j))), t = s̄/ω
    let t: Vec<f64> = s_bar.iter().zip(&omegas).map(|(s, w)| (s / w).max(0.0)).collect();
    let a: Vec<f64> = active.iter().map(|&i| r_tilde[i] / (1.0 / mu_q + r_tilde[i])).collect();
    let denom = 1.0 - t.iter().zip(&a).map(|(t, a)| t * a).sum::<f64>();
    let mut q = vec![0.0; n];
    for (k, &i) in active.iter().enumerate() {
        q[i] = t[k] / ((1.0 / mu_q + r_tilde[i]) * denom);
    }
    let total: f64 = q.iter().sum();
    if total > mu_q {
        q.iter_mut().for_each(|v| *v *= mu_q / total);
    }
    let s = crate::channel::snr_profile_vec(p, &q, r);
    VectorPrecoder { value: utility.evaluate_modes(&s).value, q, s }
}

/// Orthogonal projector onto range(R̂) for the given pilots.
pub fn estimate_range_projector(p: &GramMatrix, r: &ChannelCovariance) -> CMat {
    let cov = estimation_covariances(p, r);
    let m = cov.r_hat.matrix();
    m * pinv(m)
}
