//! Brute-force and analytic reference computations.
//!
//! Nothing here shares code paths with the optimizers beyond the utility
//! estimator and the scalar SNR formula.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{snr_profile_vec, SystemConfig};
use crate::pareto::{nu, nu_reciprocal_fixed, Direction};
use crate::solver::{project_simplex, projected_ascent, AscentOptions};
use crate::utility::{Utility, UtilitySpec};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridMode {
    Boost,
    FixedBudgets { mu_p: f64, mu_q: f64 },
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Points per free axis, endpoints included.
    pub resolution: usize,
    pub mode: GridMode,
    pub cfg: SystemConfig,
    /// Zoom levels: each re-grids the box of one cell around the incumbent.
    pub refinements: usize,
}

impl GridSpec {
    pub fn new(cfg: SystemConfig, mode: GridMode, resolution: usize) -> Self {
        Self { resolution, mode, cfg, refinements: 0 }
    }

    pub fn refined(self, levels: usize) -> Self {
        Self { refinements: levels, ..self }
    }
}

#[derive(Clone, Debug)]
pub struct GridOptimum {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub utility: f64,
    pub evaluations: usize,
}

/// Allocation for unit-cube coordinates: pilot energy fraction, pilot split
/// and data split (boost), or the two splits alone (fixed budgets).
fn allocation(grid: &GridSpec, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let cfg = &grid.cfg;
    let n = cfg.n_tx;
    let (pilot_total, data_total, splits) = match grid.mode {
        GridMode::Boost => {
            let ep = x[0] * cfg.total_energy();
            (ep, (cfg.total_energy() - ep) / cfg.data_slots(), &x[1..])
        }
        GridMode::FixedBudgets { mu_p, mu_q } => (mu_p, mu_q, x),
    };
    if n == 1 {
        return (vec![pilot_total], vec![data_total]);
    }
    (
        vec![splits[0] * pilot_total, (1.0 - splits[0]) * pilot_total],
        vec![splits[1] * data_total, (1.0 - splits[1]) * data_total],
    )
}

/// Exhaustive search over full-energy allocations for N_T ≤ 2.
pub fn grid_search_joint(grid: &GridSpec, spec: UtilitySpec) -> Result<GridOptimum, Error> {
    let cfg = &grid.cfg;
    cfg.validate()?;
    if cfg.n_tx > 2 {
        return Err(Error::Unsupported("grid oracle supports at most two transmit antennas".into()));
    }
    if grid.resolution < 2 {
        return Err(Error::Validation("grid resolution must be at least 2".into()));
    }
    let u = Utility::new(spec, cfg.n_tx)?;
    let dims = match (grid.mode, cfg.n_tx) {
        (GridMode::Boost, 1) => 1,
        (GridMode::Boost, _) => 3,
        (GridMode::FixedBudgets { .. }, 1) => 0,
        (GridMode::FixedBudgets { .. }, _) => 2,
    };
    // one training symbol excites one mode: the pilot split is 0 or 1
    let binary_split = cfg.n_tx == 2 && cfg.training_duration < 2;
    let split_axis = if matches!(grid.mode, GridMode::Boost) { 1 } else { 0 };
    let mut lo = vec![0.0; dims];
    let mut hi = vec![1.0; dims];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluations = 0;
    for _ in 0..=grid.refinements {
        let axes: Vec<Vec<f64>> = (0..dims)
            .map(|d| {
                if binary_split && d == split_axis {
                    vec![0.0, 1.0]
                } else {
                    let m = grid.resolution;
                    (0..m).map(|k| lo[d] + (hi[d] - lo[d]) * k as f64 / (m - 1) as f64).collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let point = |mut k: usize| -> Vec<f64> {
            let mut x = vec![0.0; dims];
            for d in (0..dims).rev() {
                let len = axes[d].len();
                x[d] = axes[d][k % len];
                k /= len;
            }
            x
        };
        let (v, k) = (0..total)
            .into_par_iter()
            .map(|k| {
                let (p, q) = allocation(grid, &point(k));
                let v = u.evaluate_modes(&snr_profile_vec(&p, &q, &cfg.channel_eigs)).value;
                (if v.is_nan() { f64::NEG_INFINITY } else { v }, k)
            })
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        evaluations += total;
        let x = point(k.min(total - 1));
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, x.clone()));
        }
        let x = &best.as_ref().unwrap().1;
        for d in 0..dims {
            let cell = (hi[d] - lo[d]) / (grid.resolution - 1) as f64;
            lo[d] = (x[d] - cell).max(0.0);
            hi[d] = (x[d] + cell).min(1.0);
        }
    }
    let (utility, x) = best.expect("grid has at least one point");
    let (p, q) = allocation(grid, &x);
    Ok(GridOptimum { p, q, utility, evaluations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadKind {
    /// E log(1 + s|w|²).
    MutualInfo,
    /// E 1/(1 + s|w|²).
    MmseInner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadScheme {
    AdaptiveSimpson,
    /// Series and continued fraction for e^z E₁(z).
    ExponentialIntegral,
}

/// Single-antenna Rayleigh expectation, |w|² ~ Exp(1).
pub fn quadrature_1x1(kind: QuadKind, s: f64) -> Result<f64, Error> {
    quadrature_1x1_with(kind, s, QuadScheme::AdaptiveSimpson)
}

pub fn quadrature_1x1_with(kind: QuadKind, s: f64, scheme: QuadScheme) -> Result<f64, Error> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::Validation("s must be non-negative".into()));
    }
    if s == 0.0 {
        return Ok(match kind {
            QuadKind::MutualInfo => 0.0,
            QuadKind::MmseInner => 1.0,
        });
    }
    Ok(match scheme {
        QuadScheme::AdaptiveSimpson => {
            let f = |x: f64| {
                let g = match kind {
                    QuadKind::MutualInfo => (s * x).ln_1p(),
                    QuadKind::MmseInner => 1.0 / (1.0 + s * x),
                };
                g * (-x).exp()
            };
            // split at x = 1 where most of the mass sits; the tail beyond 80
            // is below 1e-30 for any s of practical size
            let mut total = 0.0;
            for (a, b) in [(0.0, 1.0), (1.0, 8.0), (8.0, 30.0), (30.0, 80.0)] {
                total += adaptive_simpson(&f, a, b, 1e-13, 60);
            }
            total
        }
        QuadScheme::ExponentialIntegral => {
            let z = 1.0 / s;
            let g = scaled_e1(z);
            match kind {
                QuadKind::MutualInfo => g,
                QuadKind::MmseInner => z * g,
            }
        }
    })
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

/// e^z E₁(z) for z > 0.
pub fn scaled_e1(z: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if z <= 1.0 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= -z / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        (-EULER - z.ln() - sum) * z.exp()
    } else {
        // modified Lentz on E₁(z) = e^{-z} / (z + 1 − 1/(z + 3 − 4/(z + 5 − …)))
        let tiny = 1e-300;
        let mut b = z + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h
    }
}

/// Central differences of the frozen-sample estimator.
pub fn finite_diff_gradient(spec: UtilitySpec, s: &[f64], h: f64) -> Result<Vec<f64>, Error> {
    let u = Utility::new(spec, s.len())?;
    finite_diff_gradient_frozen(&u, s, h)
}

/// As `finite_diff_gradient`, reusing an existing sample set. Falls back to
/// a forward difference where s_i < h.
pub fn finite_diff_gradient_frozen(u: &Utility, s: &[f64], h: f64) -> Result<Vec<f64>, Error> {
    let scale = s.iter().fold(1.0f64, |m, v| m.max(*v));
    if !(h >= 1e-6 * scale * (1.0 - 1e-12) && h <= 1e-3 * scale * (1.0 + 1e-12)) {
        return Err(Error::Validation("step must lie in [1e-6, 1e-3]·max(s, 1)".into()));
    }
    if u.evaluate(s).singular {
        return Err(Error::NonDifferentiable("profile sits on a singular point".into()));
    }
    u.gradient(s)?;
    let mut g = Vec::with_capacity(s.len());
    for i in 0..s.len() {
        let mut up = s.to_vec();
        up[i] += h;
        let mut down = s.to_vec();
        let (lo, width) = if s[i] >= h {
            down[i] -= h;
            (u.evaluate(&down).value, 2.0 * h)
        } else {
            (u.evaluate(s).value, h)
        };
        g.push((u.evaluate(&up).value - lo) / width);
    }
    Ok(g)
}

/// Numerical minimizer of 1/ν̄ over {Σp = μ_P} by projected gradient.
pub fn fixed_budget_pilots_numeric(e: &Direction, mu_p: f64, mu_q: f64, r: &[f64]) -> Vec<f64> {
    let supp = e.support();
    let n = r.len();
    let floor = 1e-12 * mu_p;
    let embed = |z: &[f64]| {
        let mut p = vec![0.0; n];
        for (k, &i) in supp.iter().enumerate() {
            p[i] = z[k];
        }
        p
    };
    let f = |z: &[f64]| -nu_reciprocal_fixed(&embed(z), e, mu_q, r);
    let grad = |z: &[f64]| {
        Some(
            supp.iter()
                .zip(z)
                .map(|(&i, &p)| e.as_slice()[i] * (1.0 / (mu_q * r[i] * r[i]) + 1.0 / r[i]) / (p * p))
                .collect(),
        )
    };
    let k = supp.len() as f64;
    let project = |y: &[f64]| {
        let shifted: Vec<f64> = y.iter().map(|v| v - floor).collect();
        project_simplex(&shifted, mu_p - k * floor).into_iter().map(|v| v + floor).collect()
    };
    let opts = AscentOptions { max_iters: 50_000, rel_tol: 1e-16, armijo: 1e-4 };
    let z0 = vec![mu_p / k; supp.len()];
    embed(&projected_ascent(z0, f, grad, project, opts).x)
}

/// Grid maximization of ν(·, e) over pilot vectors for N_T ≤ 2.
pub fn grid_max_nu(e: &Direction, cfg: &SystemConfig, resolution: usize, refinements: usize) -> Result<(Vec<f64>, f64), Error> {
    if cfg.n_tx > 2 {
        return Err(Error::Unsupported("ν grid supports at most two transmit antennas".into()));
    }
    let budget = cfg.total_energy();
    let supp = e.support();
    let dims = supp.len();
    let mut lo = vec![0.0; dims];
    let mut hi = vec![budget; dims];
    let mut best = (f64::NEG_INFINITY, vec![0.0; cfg.n_tx]);
    for _ in 0..=refinements {
        let m = resolution;
        let coord = |d: usize, k: usize| lo[d] + (hi[d] - lo[d]) * (k as f64 + 0.5) / m as f64;
        let total = m.pow(dims as u32);
        for idx in 0..total {
            let mut p = vec![0.0; cfg.n_tx];
            let mut rest = idx;
            for (d, &i) in supp.iter().enumerate() {
                p[i] = coord(d, rest % m);
                rest /= m;
            }
            if p.iter().sum::<f64>() >= budget {
                continue;
            }
            let v = nu(&p, e, cfg)?;
            if v > best.0 {
                best = (v, p);
            }
        }
        for (d, &i) in supp.iter().enumerate() {
            let cell = (hi[d] - lo[d]) / m as f64;
            lo[d] = (best.1[i] - cell).max(0.0);
            hi[d] = (best.1[i] + cell).min(budget);
        }
    }
    Ok((best.1, best.0))
}

/// Random allocation spending the full pooled energy.
pub fn random_boost_allocation(rng: &mut ChaCha8Rng, cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let n = cfg.n_tx;
    let split = |rng: &mut ChaCha8Rng, total: f64| {
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let sw: f64 = w.iter().sum();
        w.into_iter().map(|v| total * v / sw).collect::<Vec<f64>>()
    };
    let pilot = cfg.total_energy() * rng.random::<f64>();
    let p = split(rng, pilot);
    let q = split(rng, (cfg.total_energy() - pilot) / cfg.data_slots());
    (p, q)
}
