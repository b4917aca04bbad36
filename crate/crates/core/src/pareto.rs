//! Pareto border of achievable SNR profiles in the aligned eigenvalue domain.
//!
//! For a direction e on the unit simplex, the ray-maximal profile is ν·e with
//! ν the largest 1-norm reachable along e. With pooled pilot and data energy
//! ν is quasi-concave in p and its reciprocal
//!
//! ν̆(p) = (T − T_τ)(Σ e_i/r_i + Σ e_i/(r_i² p_i)) / (Tμ − Σp) + Σ e_i/(r_i p_i)
//!
//! is convex, so a damped Newton method finds the ray maximum.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::SystemConfig;
use crate::Error;

/// Non-negative direction with unit 1-norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(e: Vec<f64>) -> Result<Self, Error> {
        if e.is_empty() || e.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation("direction entries must be finite and non-negative".into()));
        }
        if (e.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("direction must have unit 1-norm".into()));
        }
        Ok(Self(e))
    }

    /// Scales a non-negative, nonzero vector onto the simplex.
    pub fn normalized(v: &[f64]) -> Result<Self, Error> {
        let total: f64 = v.iter().sum();
        if !(total > 0.0) || v.iter().any(|x| *x < 0.0) {
            return Err(Error::Validation("cannot normalize a zero or negative vector".into()));
        }
        Self::new(v.iter().map(|x| x / total).collect())
    }

    pub fn coordinate(n: usize, k: usize) -> Self {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        Self(e)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RayResult {
    pub e: Direction,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Mode-indexed profile, equal to ν·e.
    pub s: Vec<f64>,
    pub nu: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BorderMode {
    Boost,
    FixedBudgets { mu_p: f64, mu_q: f64 },
}

fn check_support(p: &[f64], e: &Direction) -> Result<(), Error> {
    if p.len() != e.0.len() {
        return Err(Error::Validation("p and e differ in length".into()));
    }
    for i in e.support() {
        if !(p[i] > 0.0) {
            return Err(Error::Singular(format!("p_{} = 0 on a direction with e_{} > 0", i + 1, i + 1)));
        }
    }
    Ok(())
}

/// η and q for pilots p when the data budget per slot is `mu_q`.
fn eta_q_with_budget(p: &[f64], e: &Direction, r: &[f64], mu_q: f64) -> (f64, Vec<f64>) {
    let n = p.len();
    if mu_q <= 0.0 {
        return (0.0, vec![0.0; n]);
    }
    let w = |i: usize| (1.0 + r[i] * p[i]) / (r[i] * r[i] * p[i]);
    let sw: f64 = e.support().iter().map(|&i| e.0[i] * w(i)).sum();
    let eta = mu_q / sw;
    let mut q = vec![0.0; n];
    for i in e.support() {
        q[i] = eta * e.0[i] * w(i);
    }
    (eta, q)
}

/// η(p, e) and q(p, e) under pooled energy Σp + (T − T_τ)Σq = Tμ.
pub fn eta_and_q(p: &[f64], e: &Direction, cfg: &SystemConfig) -> Result<(f64, Vec<f64>), Error> {
    check_support(p, e)?;
    let mu_q = (cfg.total_energy() - p.iter().sum::<f64>()) / cfg.data_slots();
    Ok(eta_q_with_budget(p, e, &cfg.channel_eigs, mu_q))
}

fn nu_from(eta: f64, q: &[f64], r: &[f64]) -> f64 {
    if eta <= 0.0 {
        return 0.0;
    }
    eta / (1.0 + r.iter().zip(q).map(|(r, q)| r * q).sum::<f64>() - eta)
}

/// ν(p, e) = η/(1 + rᵀq − η), the 1-norm of the induced profile.
pub fn nu(p: &[f64], e: &Direction, cfg: &SystemConfig) -> Result<f64, Error> {
    let (eta, q) = eta_and_q(p, e, cfg)?;
    Ok(nu_from(eta, &q, &cfg.channel_eigs))
}

/// ν̆ = 1/ν, convex on the open feasible pilot set; +∞ outside it.
pub fn nu_reciprocal(p: &[f64], e: &Direction, cfg: &SystemConfig) -> f64 {
    let r = &cfg.channel_eigs;
    let m = cfg.total_energy() - p.iter().sum::<f64>();
    let supp = e.support();
    if m <= 0.0 || supp.iter().any(|&i| p[i] <= 0.0) {
        return f64::INFINITY;
    }
    let (a, b, c) = reciprocal_sums(p, e, r);
    cfg.data_slots() * (a + b) / m + c
}

/// (Σ e_i/r_i, Σ e_i/(r_i² p_i), Σ e_i/(r_i p_i)) over the support.
fn reciprocal_sums(p: &[f64], e: &Direction, r: &[f64]) -> (f64, f64, f64) {
    let mut s = (0.0, 0.0, 0.0);
    for i in e.support() {
        s.0 += e.0[i] / r[i];
        s.1 += e.0[i] / (r[i] * r[i] * p[i]);
        s.2 += e.0[i] / (r[i] * p[i]);
    }
    s
}

/// Gradient and Hessian of ν̆ restricted to the support coordinates.
fn reciprocal_derivatives(p: &[f64], e: &Direction, cfg: &SystemConfig, supp: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let r = &cfg.channel_eigs;
    let k = cfg.data_slots();
    let m = cfg.total_energy() - p.iter().sum::<f64>();
    let (a, b, _) = reciprocal_sums(p, e, r);
    let n = supp.len();
    let beta: Vec<f64> = supp.iter().map(|&i| e.0[i] / (r[i] * r[i] * p[i] * p[i])).collect();
    let gamma: Vec<f64> = supp.iter().map(|&i| e.0[i] / (r[i] * p[i] * p[i])).collect();
    let g = DVector::from_fn(n, |j, _| -k * beta[j] / m + k * (a + b) / (m * m) - gamma[j]);
    let h = DMatrix::from_fn(n, n, |j, l| {
        let mut v = -k * (beta[j] + beta[l]) / (m * m) + 2.0 * k * (a + b) / (m * m * m);
        if j == l {
            let pj = p[supp[j]];
            v += 2.0 * k * beta[j] / (pj * m) + 2.0 * gamma[j] / pj;
        }
        v
    });
    (g, h)
}

/// Ray maximum with pooled pilot and data energy.
pub fn maximize_nu_boost(e: &Direction, cfg: &SystemConfig) -> Result<RayResult, Error> {
    cfg.validate()?;
    let n = cfg.n_tx;
    if e.0.len() != n {
        return Err(Error::Validation("direction length must equal n_tx".into()));
    }
    let supp = e.support();
    let budget = cfg.total_energy();
    let floor = 1e-9 * budget;
    let mut p = vec![0.0; n];
    for &i in &supp {
        p[i] = budget / (2.0 * supp.len() as f64);
    }
    let mut f = nu_reciprocal(&p, e, cfg);
    for _ in 0..500 {
        let (g, h) = reciprocal_derivatives(&p, e, cfg, &supp);
        let mut reg = 0.0;
        let d = loop {
            let hr = &h + DMatrix::identity(supp.len(), supp.len()) * reg;
            if let Some(ch) = hr.cholesky() {
                break -ch.solve(&g);
            }
            reg = if reg == 0.0 { 1e-12 * h.diagonal().amax().max(1e-300) } else { reg * 10.0 };
        };
        let slope = g.dot(&d);
        if -slope <= 1e-15 * f.abs() {
            break;
        }
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..100 {
            let mut trial = p.clone();
            for (j, &i) in supp.iter().enumerate() {
                trial[i] = (p[i] + t * d[j]).max(floor);
            }
            let ft = nu_reciprocal(&trial, e, cfg);
            if ft.is_finite() && ft <= f + 0.25 * t * slope {
                moved = ft < f;
                p = trial;
                f = ft;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (eta, q) = eta_and_q(&p, e, cfg)?;
    Ok(ray_result(e.clone(), p, q, eta, &cfg.channel_eigs))
}

fn ray_result(e: Direction, p: Vec<f64>, q: Vec<f64>, eta: f64, r: &[f64]) -> RayResult {
    let nu = nu_from(eta, &q, r);
    let s = e.0.iter().map(|v| nu * v).collect();
    RayResult { e, p, q, s, nu, eta }
}

/// Closed-form pilot split for separate budgets:
/// p̄_i ∝ (1/r_i)·√(e_i(1 + μ_Q r_i)), scaled to Σp̄ = μ_P.
pub fn fixed_budget_pilots(e: &Direction, mu_p: f64, mu_q: f64, r: &[f64]) -> Vec<f64> {
    let w: Vec<f64> = e.0.iter().zip(r).map(|(e, r)| (e * (1.0 + mu_q * r)).sqrt() / r).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|w| mu_p * w / total).collect()
}

/// 1/ν̄ for separate budgets as a function of the pilots.
pub fn nu_reciprocal_fixed(p: &[f64], e: &Direction, mu_q: f64, r: &[f64]) -> f64 {
    if e.support().iter().any(|&i| p[i] <= 0.0) {
        return f64::INFINITY;
    }
    let (a, b, c) = reciprocal_sums(p, e, r);
    (a + b) / mu_q + c
}

pub fn maximize_nu_fixed_budgets(e: &Direction, mu_p: f64, mu_q: f64, cfg: &SystemConfig) -> Result<RayResult, Error> {
    if !(mu_p > 0.0 && mu_q > 0.0) {
        return Err(Error::Validation("budgets must be positive".into()));
    }
    let r = &cfg.channel_eigs;
    if e.0.len() != r.len() {
        return Err(Error::Validation("direction length must equal n_tx".into()));
    }
    let p = fixed_budget_pilots(e, mu_p, mu_q, r);
    let (eta, q) = eta_q_with_budget(&p, e, r, mu_q);
    Ok(ray_result(e.clone(), p, q, eta, r))
}

/// Deterministic directions: the coordinate vertices first, then points of
/// the additive R_d sequence mapped to the simplex by sorted spacings.
pub fn border_directions(n_dirs: usize, n: usize) -> Vec<Direction> {
    let mut out: Vec<Direction> = (0..n.min(n_dirs)).map(|k| Direction::coordinate(n, k)).collect();
    if n == 1 {
        return out;
    }
    let d = n - 1;
    // φ_d solves x^{d+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..100 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|k| phi.powi(-(k as i32))).collect();
    let mut k = 1u64;
    while out.len() < n_dirs {
        let mut u: Vec<f64> = alpha.iter().map(|a| (0.5 + a * k as f64).fract()).collect();
        k += 1;
        u.sort_by(f64::total_cmp);
        let mut e = Vec::with_capacity(n);
        let mut prev = 0.0;
        for v in u.iter().chain(std::iter::once(&1.0)) {
            e.push(v - prev);
            prev = *v;
        }
        if e.iter().all(|v| *v > 0.0) {
            out.push(Direction::normalized(&e).expect("spacings are positive"));
        }
    }
    out
}

pub fn sample_border(n_dirs: usize, mode: BorderMode, cfg: &SystemConfig) -> Result<Vec<RayResult>, Error> {
    if n_dirs == 0 {
        return Err(Error::Validation("n_dirs must be at least 1".into()));
    }
    cfg.validate()?;
    border_directions(n_dirs, cfg.n_tx)
        .par_iter()
        .map(|e| match mode {
            BorderMode::Boost => maximize_nu_boost(e, cfg),
            BorderMode::FixedBudgets { mu_p, mu_q } => maximize_nu_fixed_budgets(e, mu_p, mu_q, cfg),
        })
        .collect()
}

/// `a` dominates `b` componentwise by more than `rel_tol`·max|b|.
pub fn dominates(a: &[f64], b: &[f64], rel_tol: f64) -> bool {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tol = rel_tol * scale;
    a.iter().zip(b).all(|(x, y)| *x >= y - tol) && a.iter().zip(b).any(|(x, y)| *x > y + tol)
}
