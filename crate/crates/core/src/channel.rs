//! Channel statistics and the estimation pipeline: estimate and error
//! covariances, the effective SNR in matrix and eigenvalue form, Gram
//! factors and seeded channel draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::hermitian::{
    eig_hermitian, inv_hpd, numerical_rank, psd_eigen, sqrt_psd, CMat, EigenProfile, HermitianMatrix, C64,
};
use crate::Error;

/// Transmit-side channel correlation `R`, full rank.
#[derive(Clone, Debug)]
pub struct ChannelCovariance {
    r: HermitianMatrix,
    eigen: EigenProfile,
    inverse: CMat,
}

impl ChannelCovariance {
    pub fn new(r: HermitianMatrix) -> Result<Self, Error> {
        let eigen = eig_hermitian(&r);
        let top = eigen.values.first().copied().unwrap_or(0.0);
        let low = eigen.values.last().copied().unwrap_or(0.0);
        if !(low > 0.0) || low <= 1e-12 * top {
            return Err(Error::Validation("channel covariance must be positive definite".into()));
        }
        let inverse = inv_hpd(r.matrix())?;
        Ok(Self { r, eigen, inverse })
    }

    pub fn from_eigs(r: &[f64]) -> Result<Self, Error> {
        Self::new(HermitianMatrix::from_real_diagonal(r))
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.r
    }

    pub fn eigen(&self) -> &EigenProfile {
        &self.eigen
    }

    pub fn inverse(&self) -> &CMat {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramRole {
    Pilot,
    Transmit,
}

/// PSD Gram matrix with a trace budget: pilot Gram `P` or transmit covariance `Q`.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    m: HermitianMatrix,
    role: GramRole,
    budget: f64,
}

impl GramMatrix {
    pub fn new(m: HermitianMatrix, role: GramRole, budget: f64) -> Result<Self, Error> {
        if !(budget >= 0.0) {
            return Err(Error::Validation(format!("trace budget {budget} is negative")));
        }
        psd_eigen(&m)?;
        let t = m.trace();
        if t > budget + 1e-9 {
            return Err(Error::Validation(format!("trace {t} exceeds budget {budget}")));
        }
        Ok(Self { m, role, budget })
    }

    /// Gram matrix whose budget is its own trace.
    pub fn unbounded(m: HermitianMatrix, role: GramRole) -> Result<Self, Error> {
        let t = m.trace().max(0.0);
        Self::new(m, role, t)
    }

    pub fn pilot(m: HermitianMatrix) -> Result<Self, Error> {
        Self::unbounded(m, GramRole::Pilot)
    }

    pub fn transmit(m: HermitianMatrix) -> Result<Self, Error> {
        Self::unbounded(m, GramRole::Transmit)
    }

    pub fn zeros(n: usize, role: GramRole) -> Self {
        Self { m: HermitianMatrix::zeros(n), role, budget: 0.0 }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.m
    }

    pub fn role(&self) -> GramRole {
        self.role
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn rank(&self) -> usize {
        eig_hermitian(&self.m).rank()
    }
}

/// Estimate covariance `R̂` and error covariance `R̃`.
#[derive(Clone, Debug)]
pub struct EstimationCovariances {
    pub r_hat: HermitianMatrix,
    pub r_tilde: HermitianMatrix,
}

#[derive(Clone, Debug)]
pub struct EffectiveSnr {
    pub s: HermitianMatrix,
    /// Eigenvalues of `s`, non-increasing.
    pub profile: Vec<f64>,
    /// 1 + tr(Q R̃).
    pub denom: f64,
}

/// Eigenvalue-domain pilot and transmit allocations in the channel eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationPair {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl AllocationPair {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self, Error> {
        if p.len() != q.len() {
            return Err(Error::Validation("p and q differ in length".into()));
        }
        if p.iter().chain(&q).any(|x| !(*x >= 0.0)) {
            return Err(Error::Validation("allocations must be non-negative".into()));
        }
        Ok(Self { p, q })
    }

    /// Σp + data_slots·Σq.
    pub fn energy(&self, data_slots: f64) -> f64 {
        self.p.iter().sum::<f64>() + data_slots * self.q.iter().sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub coherence_time: usize,
    pub training_duration: usize,
    pub power: f64,
    pub channel_eigs: Vec<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("antenna counts must be positive".into());
        }
        if self.coherence_time < 2 {
            return bad("coherence_time must exceed 1".into());
        }
        let t_max = (self.coherence_time - 1).min(self.n_tx);
        if self.training_duration < 1 || self.training_duration > t_max {
            return bad(format!("training_duration must lie in 1..={t_max}"));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return bad("power must be positive".into());
        }
        if self.channel_eigs.len() != self.n_tx {
            return bad(format!("channel_eigs needs {} entries", self.n_tx));
        }
        if self.channel_eigs.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return bad("channel_eigs must be positive".into());
        }
        if self.channel_eigs.windows(2).any(|w| w[1] > w[0]) {
            return bad("channel_eigs must be non-increasing".into());
        }
        Ok(())
    }

    /// T − T_τ.
    pub fn data_slots(&self) -> f64 {
        (self.coherence_time - self.training_duration) as f64
    }

    /// Tμ.
    pub fn total_energy(&self) -> f64 {
        self.coherence_time as f64 * self.power
    }

    pub fn with_training(&self, t_tau: usize) -> Self {
        Self { training_duration: t_tau, ..self.clone() }
    }

    pub fn with_power(&self, power: f64) -> Self {
        Self { power, ..self.clone() }
    }
}

/// G = (TᴴRT + I)⁻¹ TᴴR, so that Y_τ G is the MMSE channel estimate.
pub fn estimator_matrix(pilots: &CMat, r: &ChannelCovariance) -> CMat {
    let th_r = pilots.adjoint() * r.matrix().matrix();
    let k = pilots.ncols();
    let m = &th_r * pilots + CMat::identity(k, k);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    inv_hpd(&m).expect("TᴴRT + I is positive definite") * th_r
}

pub fn estimation_covariances(p: &GramMatrix, r: &ChannelCovariance) -> EstimationCovariances {
    let r_tilde = error_covariance(p, r);
    let ep = eig_hermitian(p.matrix());
    let r_hat = if ep.rank() < p.matrix().dim() {
        estimate_covariance_mil(&ep, r)
    } else {
        estimate_covariance_direct(&r_tilde, r)
    };
    EstimationCovariances { r_hat, r_tilde }
}

/// R̃ = (R⁻¹ + P)⁻¹.
pub fn error_covariance(p: &GramMatrix, r: &ChannelCovariance) -> HermitianMatrix {
    let m = r.inverse() + p.matrix().matrix();
    let inv = inv_hpd(&HermitianMatrix::symmetrized(&m).into_matrix()).expect("R⁻¹ + P is positive definite");
    HermitianMatrix::symmetrized(&inv)
}

/// R̂ = R − R̃ by subtraction.
pub fn estimate_covariance_direct(r_tilde: &HermitianMatrix, r: &ChannelCovariance) -> HermitianMatrix {
    HermitianMatrix::symmetrized(&(r.matrix().matrix() - r_tilde.matrix()))
}

/// R̂ = R U_P (Λ_P⁻¹ + U_Pᴴ R U_P)⁻¹ U_Pᴴ R on the range of P.
pub fn estimate_covariance_mil(ep: &EigenProfile, r: &ChannelCovariance) -> HermitianMatrix {
    let n = r.dim();
    let k = ep.rank();
    if k == 0 {
        return HermitianMatrix::zeros(n);
    }
    let u = ep.basis.columns(0, k).into_owned();
    let rm = r.matrix().matrix();
    let mut inner = u.adjoint() * rm * &u;
    for i in 0..k {
        inner[(i, i)] += C64::new(1.0 / ep.values[i], 0.0);
    }
    let inner = HermitianMatrix::symmetrized(&inner).into_matrix();
    let ru = rm * &u;
    let out = &ru * inv_hpd(&inner).expect("inner matrix is positive definite") * ru.adjoint();
    HermitianMatrix::symmetrized(&out)
}

/// S = R̂^{1/2} Q R̂^{1/2} / (1 + tr(Q R̃)).
pub fn effective_snr(p: &GramMatrix, q: &GramMatrix, r: &ChannelCovariance) -> EffectiveSnr {
    let cov = estimation_covariances(p, r);
    snr_from_covariances(&cov, q.matrix())
}

pub fn snr_from_covariances(cov: &EstimationCovariances, q: &HermitianMatrix) -> EffectiveSnr {
    let denom = 1.0 + (q.matrix() * cov.r_tilde.matrix()).trace().re;
    let root = match sqrt_psd(&cov.r_hat) {
        Ok(m) => m,
        Err(_) => sqrt_psd(&clamp_psd(&cov.r_hat)).expect("clamped matrix is PSD"),
    };
    let s = root.matrix() * q.matrix() * root.matrix() * C64::new(1.0 / denom, 0.0);
    let s = HermitianMatrix::symmetrized(&s);
    let profile = eig_hermitian(&s).values.into_iter().map(|v| v.max(0.0)).collect();
    EffectiveSnr { s, profile, denom }
}

/// Projects onto the PSD cone by zeroing negative eigenvalues.
pub fn clamp_psd(a: &HermitianMatrix) -> HermitianMatrix {
    let e = eig_hermitian(a);
    HermitianMatrix::symmetrized(&crate::hermitian::spectral_map(&e, |v| v.max(0.0)))
}

/// Eigenvalue-domain estimate and error variances (r̂_i, r̃_i).
pub fn estimate_variances(p: &[f64], r: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let r_hat = p.iter().zip(r).map(|(&p, &r)| r * r * p / (1.0 + r * p)).collect();
    let r_tilde = p.iter().zip(r).map(|(&p, &r)| r / (1.0 + r * p)).collect();
    (r_hat, r_tilde)
}

/// s = (r̂ ⊙ q)/(1 + qᵀr̃), indexed by channel mode (not sorted).
pub fn snr_profile_vec(p: &[f64], q: &[f64], r: &[f64]) -> Vec<f64> {
    let (r_hat, r_tilde) = estimate_variances(p, r);
    let denom = 1.0 + q.iter().zip(&r_tilde).map(|(q, t)| q * t).sum::<f64>();
    r_hat.iter().zip(q).map(|(h, q)| h * q / denom).collect()
}

/// Factor U Λ^{1/2} with one column per nonzero eigenvalue.
pub fn gram_factor(m: &GramMatrix) -> CMat {
    let e = psd_eigen(m.matrix()).expect("GramMatrix is PSD by construction");
    let k = e.rank();
    let mut f = e.basis.columns(0, k).into_owned();
    for c in 0..k {
        f.column_mut(c).scale_mut(e.values[c].sqrt());
    }
    f
}

/// Mixes a master seed with a stream index into an independent seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard circular complex Gaussian entry (i, j) for `seed`.
pub fn whitened_entry(seed: u64, i: usize, j: usize) -> C64 {
    let key = derive_seed(derive_seed(seed, i as u64), j as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let re: f64 = StandardNormal.sample(&mut rng);
    let im: f64 = StandardNormal.sample(&mut rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// n_rx × n_cols matrix of i.i.d. unit-variance circular complex Gaussians.
pub fn sample_whitened(n_rx: usize, n_cols: usize, seed: u64) -> CMat {
    CMat::from_fn(n_rx, n_cols, |i, j| whitened_entry(seed, i, j))
}

/// True when `rank(R̂) = rank(P)` under the shared threshold.
pub fn rank_consistent(p: &GramMatrix, cov: &EstimationCovariances) -> bool {
    eig_hermitian(p.matrix()).rank() == numerical_rank(&eig_hermitian(&cov.r_hat).values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::frobenius;
    use crate::instances;

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(d)
    }

    #[test]
    fn estimator_examples() {
        let r = ChannelCovariance::from_eigs(&[1.0]).unwrap();
        let g = estimator_matrix(&CMat::from_element(1, 1, C64::new(1.0, 0.0)), &r);
        assert!((g[(0, 0)].re - 0.5).abs() < 1e-15);

        let r = ChannelCovariance::from_eigs(&[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let g = estimator_matrix(&CMat::identity(2, 2), &r);
        assert!(frobenius(&(g - diag(&[0.4, 0.25]).into_matrix())) < 1e-15);

        let g = estimator_matrix(&CMat::zeros(2, 1), &r);
        assert_eq!(frobenius(&g), 0.0);
    }

    #[test]
    fn covariance_examples() {
        let r = ChannelCovariance::from_eigs(&[0.7, 0.3]).unwrap();
        let c = estimation_covariances(&GramMatrix::zeros(2, GramRole::Pilot), &r);
        assert_eq!(frobenius(c.r_hat.matrix()), 0.0);
        assert!(frobenius(&(c.r_tilde.matrix() - r.matrix().matrix())) < 1e-15);

        let r1 = ChannelCovariance::from_eigs(&[1.0]).unwrap();
        let c = estimation_covariances(&GramMatrix::pilot(diag(&[1.0])).unwrap(), &r1);
        assert!((c.r_hat.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((c.r_tilde.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);

        let c = estimation_covariances(&GramMatrix::pilot(diag(&[1e9, 1e9])).unwrap(), &r);
        let rel = frobenius(&(c.r_hat.matrix() - r.matrix().matrix())) / frobenius(r.matrix().matrix());
        assert!(rel < 1e-6);
    }

    #[test]
    fn direct_and_mil_paths_agree() {
        let mut g = instances::rng(7);
        for k in 0..20 {
            let n = 2 + k % 3;
            let r = ChannelCovariance::new(instances::psd_with_rank(&mut g, n, n, 0.1, 2.0)).unwrap();
            let p = GramMatrix::pilot(instances::psd_with_rank(&mut g, n, n, 0.1, 5.0)).unwrap();
            let rt = error_covariance(&p, &r);
            let a = estimate_covariance_direct(&rt, &r);
            let b = estimate_covariance_mil(&eig_hermitian(p.matrix()), &r);
            assert!(frobenius(&(a.matrix() - b.matrix())) <= 1e-8 * frobenius(r.matrix().matrix()));
        }
    }

    #[test]
    fn snr_examples() {
        let r = ChannelCovariance::from_eigs(&[1.0]).unwrap();
        let s = effective_snr(&GramMatrix::pilot(diag(&[1.0])).unwrap(), &GramMatrix::transmit(diag(&[2.0])).unwrap(), &r);
        assert!((s.profile[0] - 0.5).abs() < 1e-15);
        assert!((s.denom - 2.0).abs() < 1e-15);
        assert_eq!(snr_profile_vec(&[1.0], &[2.0], &[1.0]), vec![0.5]);
        assert_eq!(snr_profile_vec(&[1.0, 2.0], &[0.0, 0.0], &[0.5, 0.5]), vec![0.0, 0.0]);

        let r2 = ChannelCovariance::from_eigs(&[0.6, 0.4]).unwrap();
        let s = effective_snr(&GramMatrix::zeros(2, GramRole::Pilot), &GramMatrix::transmit(diag(&[1.0, 1.0])).unwrap(), &r2);
        assert!(s.profile.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vector_matches_matrix_path() {
        let r = [2.0 / 3.0, 1.0 / 3.0];
        let v = snr_profile_vec(&[1.0, 1.0], &[1.0, 1.0], &r);
        let m = effective_snr(
            &GramMatrix::pilot(diag(&[1.0, 1.0])).unwrap(),
            &GramMatrix::transmit(diag(&[1.0, 1.0])).unwrap(),
            &ChannelCovariance::from_eigs(&r).unwrap(),
        );
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in sorted.iter().zip(&m.profile) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gram_factor_examples() {
        let f = gram_factor(&GramMatrix::pilot(diag(&[4.0, 0.0])).unwrap());
        assert_eq!(f.shape(), (2, 1));
        assert!((f[(0, 0)].norm() - 2.0).abs() < 1e-14 && f[(1, 0)].norm() < 1e-14);
        let f = gram_factor(&GramMatrix::pilot(HermitianMatrix::identity(2)).unwrap());
        assert!(frobenius(&(&f * f.adjoint() - CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn whitened_is_deterministic_and_order_free() {
        let a = sample_whitened(3, 2, 99);
        let b = sample_whitened(3, 2, 99);
        assert_eq!(a, b);
        assert_eq!(a[(2, 1)], whitened_entry(99, 2, 1));
        assert_ne!(sample_whitened(3, 2, 100), a);
    }

    #[test]
    fn whitened_moments() {
        let n = 100_000;
        let vals: Vec<f64> = (0..n).map(|k| whitened_entry(derive_seed(5, k), 0, 0).norm_sqr()).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn config_validation() {
        let cfg = SystemConfig { n_tx: 2, n_rx: 2, coherence_time: 10, training_duration: 2, power: 10.0, channel_eigs: vec![2.0 / 3.0, 1.0 / 3.0] };
        assert!(cfg.validate().is_ok());
        assert!(cfg.with_training(3).validate().is_err());
        assert!(SystemConfig { channel_eigs: vec![0.2, 0.8], ..cfg.clone() }.validate().is_err());
        assert!(SystemConfig { coherence_time: 2, training_duration: 2, ..cfg.clone() }.validate().is_err());
    }
}
