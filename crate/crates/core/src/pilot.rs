//! Pilot design for a prescribed precoder.
//!
//! The ascent runs over the estimate covariance R̂ rather than over P, since
//! the feasible R̂ set {0 ⪯ R̂ ≺ R, tr((R − R̂)⁻¹) − tr(R⁻¹) ≤ μ_P} is convex
//! and the utility is monotone in the profile of
//! S′ = Q^{1/2} R̂ Q^{1/2} / (1 + tr(QR) − tr(QR̂)).

use crate::channel::{estimate_variances, snr_from_covariances, ChannelCovariance, EffectiveSnr, GramMatrix, GramRole};
use crate::hermitian::{
    eig_hermitian, frobenius, inv_hpd, pinv_psd, psd_eigen, spectral_map, sqrt_psd, CMat, HermitianMatrix, C64,
    RANK_TOL,
};
use crate::solver::{projected_ascent, AscentOptions};
use crate::utility::{Utility, UtilityValue};
use crate::Error;

/// Feasible estimate covariances for a pilot budget.
#[derive(Clone, Debug)]
pub struct EstimateCovDomain {
    pub r: ChannelCovariance,
    pub mu_p: f64,
}

impl EstimateCovDomain {
    pub fn new(r: ChannelCovariance, mu_p: f64) -> Self {
        Self { r, mu_p }
    }

    /// Pilot energy tr((R − R̂)⁻¹) − tr(R⁻¹), or `None` unless R̂ ≺ R.
    pub fn energy(&self, r_hat: &HermitianMatrix) -> Option<f64> {
        pilot_energy(r_hat, &self.r)
    }

    pub fn contains(&self, r_hat: &HermitianMatrix) -> bool {
        let psd = eig_hermitian(r_hat).values.last().is_none_or(|&v| v >= -1e-9);
        psd && self.energy(r_hat).is_some_and(|e| e <= self.mu_p + 1e-9)
    }
}

fn pilot_energy(r_hat: &HermitianMatrix, r: &ChannelCovariance) -> Option<f64> {
    let diff = HermitianMatrix::symmetrized(&(r.matrix().matrix() - r_hat.matrix())).into_matrix();
    let inv = inv_hpd(&diff).ok()?;
    Some(inv.trace().re - r.inverse().trace().re)
}

/// S′ = Q^{1/2} R̂ Q^{1/2} / (τ − tr(QR̂)), τ = 1 + tr(QR).
pub fn s_prime(r_hat: &HermitianMatrix, q: &GramMatrix, r: &ChannelCovariance) -> Result<EffectiveSnr, Error> {
    let qm = q.matrix().matrix();
    let tau = 1.0 + (qm * r.matrix().matrix()).trace().re;
    let denom = tau - (qm * r_hat.matrix()).trace().re;
    if denom <= 1e-12 {
        return Err(Error::Denominator(denom));
    }
    let root = sqrt_psd(q.matrix())?;
    let s = HermitianMatrix::symmetrized(&(root.matrix() * r_hat.matrix() * root.matrix() * C64::new(1.0 / denom, 0.0)));
    let profile = eig_hermitian(&s).values.into_iter().map(|v| v.max(0.0)).collect();
    Ok(EffectiveSnr { s, profile, denom })
}

/// P = (R − R̂)⁻¹ − R⁻¹.
pub fn pilot_from_estimate_cov(r_hat: &HermitianMatrix, r: &ChannelCovariance) -> Result<GramMatrix, Error> {
    let diff = HermitianMatrix::symmetrized(&(r_hat.matrix() - r.matrix().matrix()));
    let top = eig_hermitian(&diff).values[0];
    if top >= -1e-10 {
        return Err(Error::Validation("estimate covariance is not strictly below R".into()));
    }
    let inv = inv_hpd(&(-diff.into_matrix()))?;
    let p = HermitianMatrix::symmetrized(&(inv - r.inverse()));
    let mut e = psd_eigen(&p).unwrap_or_else(|_| {
        let mut e = eig_hermitian(&p);
        e.values.iter_mut().for_each(|v| *v = v.max(0.0));
        e
    });
    let top = e.values.iter().fold(0.0f64, |m, v| m.max(*v));
    e.values.iter_mut().for_each(|v| {
        if *v <= RANK_TOL * top {
            *v = 0.0
        }
    });
    GramMatrix::pilot(HermitianMatrix::symmetrized(&spectral_map(&e, |v| v)))
}

/// Pilot eigenvalues for a precoder diagonal in the channel eigenbasis.
#[derive(Clone, Debug)]
pub struct VectorPilot {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub value: f64,
}

/// Euclidean projection onto {0 ≤ x_i < r_i, Σ 1/(r_i − x_i) ≤ cap}.
pub fn project_estimate_variances(y: &[f64], r: &[f64], cap: f64) -> Vec<f64> {
    let h = |x: &[f64]| x.iter().zip(r).map(|(x, r)| 1.0 / (r - x)).sum::<f64>();
    let clamped: Vec<f64> = y.iter().zip(r).map(|(y, r)| y.clamp(0.0, *r)).collect();
    if clamped.iter().zip(r).all(|(x, r)| x < r) && h(&clamped) <= cap {
        return clamped;
    }
    // x_i(λ) minimizes ½(x − y_i)² + λ/(r_i − x) on [0, r_i)
    let solve = |lam: f64| -> Vec<f64> {
        y.iter()
            .zip(r)
            .map(|(&yi, &ri)| {
                let phi = |x: f64| x - yi + lam / ((ri - x) * (ri - x));
                if phi(0.0) >= 0.0 {
                    return 0.0;
                }
                let (mut lo, mut hi) = (0.0, ri);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if phi(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect()
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h(&solve(hi)) > cap {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(&solve(mid)) > cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    solve(hi)
}

/// Vector-domain pilot optimization with budget Σp ≤ `mu_p`.
///
/// Modes without transmit power receive no pilot energy. `warm` is an
/// incumbent pilot allocation; the result never falls below it.
pub fn optimize_pilot_vec(q: &[f64], r: &[f64], mu_p: f64, utility: &Utility, warm: Option<&[f64]>) -> VectorPilot {
    let n = r.len();
    let active: Vec<usize> = (0..n).filter(|&i| q[i] > 0.0).collect();
    if active.is_empty() || !(mu_p > 0.0) {
        let p = vec![0.0; n];
        let s = crate::channel::snr_profile_vec(&p, q, r);
        return VectorPilot { value: utility.evaluate_modes(&s).value, p, s };
    }
    let ra: Vec<f64> = active.iter().map(|&i| r[i]).collect();
    let qa: Vec<f64> = active.iter().map(|&i| q[i]).collect();
    let tau = 1.0 + qa.iter().zip(&ra).map(|(q, r)| q * r).sum::<f64>();
    let cap = mu_p + ra.iter().map(|r| 1.0 / r).sum::<f64>();
    let profile = |x: &[f64]| {
        let den = tau - qa.iter().zip(x).map(|(q, x)| q * x).sum::<f64>();
        let mut s = vec![0.0; n];
        for (k, &i) in active.iter().enumerate() {
            s[i] = x[k] * qa[k] / den;
        }
        (s, den)
    };
    let f = |x: &[f64]| utility.evaluate_modes(&profile(x).0).value;
    let grad = |x: &[f64]| {
        let (s, den) = profile(x);
        let g = utility.gradient_modes(&s)?;
        let gs: f64 = g.iter().zip(&s).map(|(g, s)| g * s).sum();
        Some(active.iter().enumerate().map(|(k, &i)| qa[k] * (g[i] + gs) / den).collect())
    };
    let start_p: Vec<f64> = match warm {
        Some(p0) => active.iter().map(|&i| p0[i]).collect(),
        None => vec![mu_p / active.len() as f64; active.len()],
    };
    let x0 = estimate_variances(&start_p, &ra).0;
    let res = projected_ascent(x0, f, grad, |y| project_estimate_variances(y, &ra, cap), AscentOptions::default());
    let mut p = vec![0.0; n];
    for (k, &i) in active.iter().enumerate() {
        let x = res.x[k];
        p[i] = x / (ra[k] * (ra[k] - x));
    }
    let total: f64 = p.iter().sum();
    if total > mu_p {
        p.iter_mut().for_each(|v| *v *= mu_p / total);
    }
    let s = crate::channel::snr_profile_vec(&p, q, r);
    VectorPilot { value: utility.evaluate_modes(&s).value, p, s }
}

#[derive(Clone, Debug)]
pub struct PilotSolution {
    pub p: GramMatrix,
    /// Sorted SNR profile at the optimum.
    pub profile: Vec<f64>,
    pub value: UtilityValue,
    /// Q and R commuted, so the eigenvalue-domain solver was used.
    pub aligned: bool,
}

pub fn optimize_pilot(q: &GramMatrix, r: &ChannelCovariance, mu_p: f64, utility: &Utility) -> Result<PilotSolution, Error> {
    if !(mu_p > 0.0) {
        return Err(Error::Validation("mu_p must be positive".into()));
    }
    let n = r.dim();
    let qm = q.matrix().matrix();
    let rm = r.matrix().matrix();
    let comm = qm * rm - rm * qm;
    let aligned = frobenius(&comm) <= 1e-10 * frobenius(qm).max(1e-300) * frobenius(rm);
    let p = if q.trace() <= 0.0 {
        HermitianMatrix::zeros(n)
    } else if aligned {
        // joint eigenbasis of commuting R and Q from a generic combination
        let k = 0.618_033_988_749_894_9 * frobenius(rm) / frobenius(qm);
        let mix = HermitianMatrix::symmetrized(&(rm + qm * C64::new(k, 0.0)));
        let u = eig_hermitian(&mix).basis;
        let rd: Vec<f64> = (0..n).map(|i| (u.column(i).adjoint() * rm * u.column(i))[(0, 0)].re).collect();
        let qd: Vec<f64> = (0..n).map(|i| (u.column(i).adjoint() * qm * u.column(i))[(0, 0)].re.max(0.0)).collect();
        let qd: Vec<f64> = {
            let top = qd.iter().fold(0.0f64, |m, v| m.max(*v));
            qd.iter().map(|&v| if v > RANK_TOL * top { v } else { 0.0 }).collect()
        };
        let sol = optimize_pilot_vec(&qd, &rd, mu_p, utility, None);
        crate::instances::conjugate_diag(&u, &sol.p)
    } else {
        matrix_pilot(q, r, mu_p, utility)?
    };
    let p = GramMatrix::new(p, GramRole::Pilot, mu_p * (1.0 + 1e-12) + 1e-12)?;
    let cov = crate::channel::estimation_covariances(&p, r);
    let snr = snr_from_covariances(&cov, q.matrix());
    Ok(PilotSolution { value: utility.evaluate(&snr.profile), profile: snr.profile, p, aligned })
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Real coordinates of a Hermitian matrix under which the Euclidean inner
/// product equals the Frobenius one.
fn herm_to_vec(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        v.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(SQRT2 * m[(i, j)].re);
            v.push(SQRT2 * m[(i, j)].im);
        }
    }
    v
}

fn vec_to_herm(v: &[f64], n: usize) -> HermitianMatrix {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(v[k], v[k + 1]) / SQRT2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    HermitianMatrix::symmetrized(&m)
}

/// Projected-gradient ascent over {P ⪰ 0, tr P ≤ μ_P}. The gradient in P
/// follows from dR̂ = R̃ dP R̃; the projection clips the spectrum onto the
/// capped simplex. Starts from the scaled identity and from P ∝ Q.
fn matrix_pilot(q: &GramMatrix, r: &ChannelCovariance, mu_p: f64, utility: &Utility) -> Result<HermitianMatrix, Error> {
    let n = r.dim();
    let qm = q.matrix().matrix().clone();
    let q_root = sqrt_psd(q.matrix())?.into_matrix();
    let rm = r.matrix().matrix().clone();
    let tau = 1.0 + (&qm * &rm).trace().re;
    let pilot = |v: &[f64]| GramMatrix::unbounded(crate::channel::clamp_psd(&vec_to_herm(v, n)), GramRole::Pilot).ok();
    let f = |v: &[f64]| match pilot(v) {
        Some(p) => utility.evaluate(&crate::channel::effective_snr(&p, q, r).profile).value,
        None => f64::NEG_INFINITY,
    };
    let grad = |v: &[f64]| {
        let p = pilot(v)?;
        let cov = crate::channel::estimation_covariances(&p, r);
        let den = tau - (&qm * cov.r_hat.matrix()).trace().re;
        if den <= 1e-12 {
            return None;
        }
        let s = HermitianMatrix::symmetrized(&(&q_root * cov.r_hat.matrix() * &q_root * C64::new(1.0 / den, 0.0)));
        let mut e = eig_hermitian(&s);
        e.values.iter_mut().for_each(|v| *v = v.max(0.0));
        let g = utility.gradient(&e.values).ok()?;
        let gs: f64 = g.iter().zip(&e.values).map(|(g, s)| g * s).sum();
        let gm = spectral_map(&crate::hermitian::EigenProfile { values: g, basis: e.basis }, |v| v);
        let grad_hat = (&q_root * gm * &q_root + &qm * C64::new(gs, 0.0)) * C64::new(1.0 / den, 0.0);
        let rt = cov.r_tilde.matrix();
        Some(herm_to_vec(&(rt * grad_hat * rt)))
    };
    let project = |v: &[f64]| {
        let mut e = eig_hermitian(&vec_to_herm(v, n));
        e.values = crate::solver::project_capped_simplex(&e.values, mu_p);
        herm_to_vec(&spectral_map(&e, |v| v))
    };
    let starts = [
        HermitianMatrix::identity(n).scaled(mu_p / n as f64),
        q.matrix().scaled(mu_p / q.trace().max(1e-300)),
    ];
    let opts = AscentOptions { max_iters: 3000, ..AscentOptions::default() };
    let best = starts
        .iter()
        .map(|p0| projected_ascent(herm_to_vec(p0.matrix()), f, grad, project, opts))
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .expect("two starts");
    let p = GramMatrix::pilot(crate::channel::clamp_psd(&vec_to_herm(&best.x, n)))?;
    let r_hat = crate::channel::estimation_covariances(&p, r).r_hat;
    let completed = complete_to_precoder_rank(&r_hat, q, r, mu_p)?;
    let value = |p: &GramMatrix| utility.evaluate(&crate::channel::effective_snr(p, q, r).profile).value;
    match completed {
        Some(pc) if value(&pc) >= value(&p) - 1e-12 * value(&p).abs() => Ok(pc.matrix().clone()),
        _ => Ok(p.matrix().clone()),
    }
}

/// Removes estimate energy outside the precoder's range without changing S′:
/// in the basis (range(Q), null(Q)) the lower-right block of R̂ becomes the
/// minimal PSD completion Bᴴ A⁺ B. The induced pilots are then rescaled to
/// the full budget. Returns `None` when Q has full rank.
fn complete_to_precoder_rank(
    r_hat: &HermitianMatrix,
    q: &GramMatrix,
    r: &ChannelCovariance,
    mu_p: f64,
) -> Result<Option<GramMatrix>, Error> {
    let n = r.dim();
    let eq = eig_hermitian(q.matrix());
    let k = eq.rank();
    if k >= n {
        return Ok(None);
    }
    let u = &eq.basis;
    let m = u.adjoint() * r_hat.matrix() * u;
    let a = HermitianMatrix::symmetrized(&m.view((0, 0), (k, k)).into_owned());
    let b = m.view((0, k), (k, n - k)).into_owned();
    let a_pinv = pinv_psd(&crate::channel::clamp_psd(&a).pipe(|x| eig_hermitian(&x)));
    let d = b.adjoint() * a_pinv * &b;
    let mut mc = m.clone();
    mc.view_mut((k, k), (n - k, n - k)).copy_from(&d);
    let r_hat_c = HermitianMatrix::symmetrized(&(u * mc * u.adjoint()));
    let p = pilot_from_estimate_cov(&r_hat_c, r)?;
    let t = p.trace();
    if t <= 0.0 {
        return Ok(Some(p));
    }
    Ok(Some(GramMatrix::pilot(p.matrix().scaled(mu_p / t))?))
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::utility::{UtilityKind, UtilitySpec};

    #[test]
    fn s_prime_examples() {
        let r = ChannelCovariance::from_eigs(&[1.0]).unwrap();
        let q = GramMatrix::transmit(HermitianMatrix::from_real_diagonal(&[2.0])).unwrap();
        let s = s_prime(&HermitianMatrix::from_real_diagonal(&[0.5]), &q, &r).unwrap();
        assert!((s.profile[0] - 0.5).abs() < 1e-15);
        let s = s_prime(&HermitianMatrix::zeros(1), &q, &r).unwrap();
        assert_eq!(s.profile[0], 0.0);
    }

    #[test]
    fn pilot_recovery_examples() {
        let r = ChannelCovariance::from_eigs(&[1.0]).unwrap();
        let p = pilot_from_estimate_cov(&HermitianMatrix::from_real_diagonal(&[0.5]), &r).unwrap();
        assert!((p.trace() - 1.0).abs() < 1e-14);
        let p = pilot_from_estimate_cov(&HermitianMatrix::zeros(1), &r).unwrap();
        assert_eq!(p.trace(), 0.0);
        assert!(pilot_from_estimate_cov(&HermitianMatrix::from_real_diagonal(&[1.0]), &r).is_err());
    }

    #[test]
    fn projection_is_feasible_and_idempotent() {
        let r = [0.7, 0.3];
        let cap = 5.0 + r.iter().map(|r| 1.0 / r).sum::<f64>();
        let x = project_estimate_variances(&[0.9, 0.4], &r, cap);
        let h: f64 = x.iter().zip(&r).map(|(x, r)| 1.0 / (r - x)).sum();
        assert!(h <= cap && (h - cap).abs() < 1e-9 * cap);
        let y = project_estimate_variances(&x, &r, cap);
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn single_mode_takes_all_energy() {
        let u = Utility::new(UtilitySpec::new(UtilityKind::MutualInfo, 1).samples(500), 1).unwrap();
        let sol = optimize_pilot_vec(&[3.0], &[1.0], 2.0, &u, None);
        assert!((sol.p[0] - 2.0).abs() < 1e-8, "{:?}", sol.p);
    }

    #[test]
    fn zero_precoder_gives_zero_pilots() {
        let r = ChannelCovariance::from_eigs(&[0.6, 0.4]).unwrap();
        let u = Utility::new(UtilitySpec::new(UtilityKind::Trace, 1), 2).unwrap();
        let sol = optimize_pilot(&GramMatrix::zeros(2, GramRole::Transmit), &r, 3.0, &u).unwrap();
        assert_eq!(sol.p.trace(), 0.0);
    }

    #[test]
    fn hermitian_coordinates_round_trip() {
        let mut g = crate::instances::rng(1);
        let h = crate::instances::hermitian(&mut g, 3);
        let back = vec_to_herm(&herm_to_vec(h.matrix()), 3);
        assert!(frobenius(&(back.matrix() - h.matrix())) < 1e-14);
        let n2: f64 = herm_to_vec(h.matrix()).iter().map(|v| v * v).sum();
        assert!((n2.sqrt() - frobenius(h.matrix())).abs() < 1e-12);
    }
}
