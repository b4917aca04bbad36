//! Alternating joint pilot/precoder optimization in the aligned eigenvalue
//! domain.
//!
//! Each cycle optimizes the pilots for the current precoder, then the
//! precoder for the new pilots (both within the incumbent budgets), and
//! finally re-projects onto the Pareto border along the direction of the
//! resulting profile. Every step keeps the incumbent when it would lose,
//! so the frozen-sample utility never decreases.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{snr_profile_vec, SystemConfig};
use crate::pareto::{maximize_nu_boost, maximize_nu_fixed_budgets, Direction};
use crate::pilot::optimize_pilot_vec;
use crate::precoder::optimize_precoder_vec;
use crate::utility::{Utility, UtilityKind, UtilitySpec, UtilityValue};
use crate::Error;

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    pub utility: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IterationTrace {
    /// Entry 0 is the starting point; one entry per completed cycle after it.
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub cycle_detected: bool,
}

impl IterationTrace {
    pub fn cycles(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JointResult {
    pub p_star: Vec<f64>,
    pub q_star: Vec<f64>,
    pub s_star: Vec<f64>,
    pub t_tau_star: usize,
    /// Frozen-sample utility, unweighted.
    pub utility: f64,
    pub std_error: f64,
    /// Same allocation evaluated on an independent sample set.
    pub fresh_utility: f64,
    /// Time-overhead factor (T − T_τ)/T for rate utilities, 1 otherwise.
    pub weight: f64,
    pub trace: IterationTrace,
    pub rank_star: usize,
    /// Weighted utility for every training duration searched.
    pub per_training: Vec<(usize, f64)>,
}

impl JointResult {
    pub fn weighted_utility(&self) -> f64 {
        self.weight * self.utility
    }

    pub fn weighted_std_error(&self) -> f64 {
        self.weight * self.std_error
    }

    pub fn nonzero_counts(&self) -> (usize, usize) {
        (count_nonzero(&self.p_star), count_nonzero(&self.q_star))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct JointOptions {
    pub eps: f64,
    pub max_iters: usize,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self { eps: 1e-6, max_iters: 500 }
    }
}

#[derive(Clone, Copy, Debug)]
enum Budgets {
    Boost,
    Fixed { mu_p: f64, mu_q: f64 },
}

pub(crate) fn count_nonzero(v: &[f64]) -> usize {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    v.iter().filter(|x| x.abs() > 1e-9 * top.max(1e-300)).count()
}

/// Whether training time is charged against the utility.
pub fn is_rate(kind: UtilityKind) -> bool {
    !matches!(kind, UtilityKind::MmseBound | UtilityKind::RegularizedMse)
}

pub fn rate_weight(kind: UtilityKind, cfg: &SystemConfig) -> f64 {
    if is_rate(kind) {
        cfg.data_slots() / cfg.coherence_time as f64
    } else {
        1.0
    }
}

fn fresh_seed(master: u64) -> u64 {
    crate::channel::derive_seed(master ^ 0x5eed_f00d_dead_beef, u64::MAX)
}

/// All subsets of {0..n} with exactly k elements, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Starting supports: every mode set a pilot of length T_τ can excite,
/// largest first. The alternation never revives a mode it has switched
/// off, so each support size is a separate basin.
fn supports(cfg: &SystemConfig) -> Vec<Vec<usize>> {
    let k_max = cfg.training_duration.min(cfg.n_tx);
    (1..=k_max).rev().flat_map(|k| combinations(cfg.n_tx, k)).collect()
}

fn spread(n: usize, support: &[usize], total: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &i in support {
        v[i] = total / support.len() as f64;
    }
    v
}

struct Run {
    p: Vec<f64>,
    q: Vec<f64>,
    value: UtilityValue,
    trace: IterationTrace,
}

fn alternate(cfg: &SystemConfig, u: &Utility, support: &[usize], budgets: Budgets, opts: JointOptions) -> Result<Run, Error> {
    let n = cfg.n_tx;
    let r = &cfg.channel_eigs;
    let (mut p, mut q) = match budgets {
        Budgets::Boost => (
            spread(n, support, cfg.training_duration as f64 * cfg.power),
            spread(n, support, cfg.power),
        ),
        Budgets::Fixed { mu_p, mu_q } => (spread(n, support, mu_p), spread(n, support, mu_q)),
    };
    let eval = |p: &[f64], q: &[f64]| u.evaluate_modes(&snr_profile_vec(p, q, r));
    let mut cur = eval(&p, &q);
    let mut trace = IterationTrace::default();
    let record = |trace: &mut IterationTrace, p: &[f64], q: &[f64], v: UtilityValue| {
        trace.iterations.push(IterationRecord {
            p: p.to_vec(),
            q: q.to_vec(),
            s: snr_profile_vec(p, q, r),
            utility: v.value,
            std_error: v.std_error,
        });
    };
    record(&mut trace, &p, &q, cur);
    let mut best = (p.clone(), q.clone(), cur);
    let mut plateau = 0;
    let mut last_move = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let (p_prev, q_prev, f_prev) = (p.clone(), q.clone(), cur.value);

        let pa = optimize_pilot_vec(&q, r, p.iter().sum(), u, Some(&p));
        let va = eval(&pa.p, &q);
        if va.value >= cur.value {
            p = pa.p;
            cur = va;
        }

        let qb = optimize_precoder_vec(&p, r, q.iter().sum(), u, Some(&q));
        let vb = eval(&p, &qb.q);
        if vb.value >= cur.value {
            q = qb.q;
            cur = vb;
        }

        let s = snr_profile_vec(&p, &q, r);
        let top = s.iter().fold(0.0f64, |m, v| m.max(*v));
        if top > 0.0 {
            let cleaned: Vec<f64> = s.iter().map(|&v| if v > 1e-12 * top { v } else { 0.0 }).collect();
            let e = Direction::normalized(&cleaned)?;
            let ray = match budgets {
                Budgets::Boost => maximize_nu_boost(&e, cfg)?,
                Budgets::Fixed { mu_p, mu_q } => maximize_nu_fixed_budgets(&e, mu_p, mu_q, cfg)?,
            };
            let vc = eval(&ray.p, &ray.q);
            if vc.value >= cur.value {
                p = ray.p;
                q = ray.q;
                cur = vc;
            }
        }

        record(&mut trace, &p, &q, cur);
        if cur.value > best.2.value {
            best = (p.clone(), q.clone(), cur);
        }
        let scale = p.iter().chain(&q).fold(1.0f64, |m, v| m.max(v.abs()));
        let movement = p
            .iter()
            .zip(&p_prev)
            .chain(q.iter().zip(&q_prev))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        // a plateau with shrinking steps is slow convergence, not a cycle
        let shrinking = movement < 0.9 * last_move;
        last_move = movement;
        if cur.value - f_prev <= opts.eps {
            if movement <= 1e-6 || shrinking {
                trace.converged = true;
                break;
            }
            plateau += 1;
            if plateau >= 5 {
                trace.cycle_detected = true;
                break;
            }
        } else {
            plateau = 0;
        }
    }
    Ok(Run { p: best.0, q: best.1, value: best.2, trace })
}

fn run_over_supports(cfg: &SystemConfig, spec: UtilitySpec, budgets: Budgets, opts: JointOptions) -> Result<JointResult, Error> {
    cfg.validate()?;
    if !(opts.eps > 0.0) {
        return Err(Error::Validation("eps must be positive".into()));
    }
    let u = Utility::new(spec, cfg.n_tx)?;
    let mut best: Option<Run> = None;
    for support in supports(cfg) {
        let run = alternate(cfg, &u, &support, budgets, opts)?;
        if best.as_ref().is_none_or(|b| run.value.value > b.value.value) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one support");
    Ok(finish(cfg, &u, run.p, run.q, run.value, run.trace))
}

fn finish(cfg: &SystemConfig, u: &Utility, p: Vec<f64>, q: Vec<f64>, value: UtilityValue, trace: IterationTrace) -> JointResult {
    let s = snr_profile_vec(&p, &q, &cfg.channel_eigs);
    let fresh = u
        .reseeded(fresh_seed(u.spec().master_seed))
        .map(|f| f.evaluate_modes(&s).value)
        .unwrap_or(value.value);
    let weight = rate_weight(u.kind(), cfg);
    let rank_star = count_nonzero(&p).min(count_nonzero(&q));
    JointResult {
        t_tau_star: cfg.training_duration,
        utility: value.value,
        std_error: value.std_error,
        fresh_utility: fresh,
        weight,
        rank_star,
        per_training: vec![(cfg.training_duration, weight * value.value)],
        p_star: p,
        q_star: q,
        s_star: s,
        trace,
    }
}

/// Joint optimization with pooled pilot and data energy at the configured
/// training duration.
pub fn run_boost(cfg: &SystemConfig, spec: UtilitySpec, opts: JointOptions) -> Result<JointResult, Error> {
    run_over_supports(cfg, spec, Budgets::Boost, opts)
}

/// Joint optimization with separate pilot and per-slot data budgets.
pub fn run_fixed_budgets(cfg: &SystemConfig, spec: UtilitySpec, mu_p: f64, mu_q: f64, opts: JointOptions) -> Result<JointResult, Error> {
    if !(mu_p > 0.0 && mu_q > 0.0) {
        return Err(Error::Validation("budgets must be positive".into()));
    }
    run_over_supports(cfg, spec, Budgets::Fixed { mu_p, mu_q }, opts)
}

/// Searches the training duration over 1..=min(T − 1, N_T), weighting rate
/// utilities by (T − T_τ)/T. `cfg.training_duration` is ignored.
pub fn run_full_fledged(cfg: &SystemConfig, spec: UtilitySpec, opts: JointOptions) -> Result<JointResult, Error> {
    let t_max = (cfg.coherence_time.saturating_sub(1)).min(cfg.n_tx);
    if t_max == 0 {
        return Err(Error::Validation("coherence_time must exceed 1".into()));
    }
    let results: Vec<JointResult> = (1..=t_max)
        .into_par_iter()
        .map(|t| run_boost(&cfg.with_training(t), spec, opts))
        .collect::<Result<_, _>>()?;
    let per_training: Vec<(usize, f64)> = results.iter().map(|r| (r.t_tau_star, r.weighted_utility())).collect();
    let mut best = results
        .into_iter()
        .reduce(|a, b| if b.weighted_utility() > a.weighted_utility() { b } else { a })
        .expect("at least one training duration");
    best.per_training = per_training;
    Ok(best)
}

/// Uniform pilots T_τμ spread over the min(T_τ, N_T) strongest modes and
/// per-slot data power μ spread over the same modes.
pub fn uniform_pair(cfg: &SystemConfig) -> (Vec<f64>, Vec<f64>) {
    let k = cfg.training_duration.min(cfg.n_tx);
    let support: Vec<usize> = (0..k).collect();
    (
        spread(cfg.n_tx, &support, cfg.training_duration as f64 * cfg.power),
        spread(cfg.n_tx, &support, cfg.power),
    )
}

/// Baseline with no optimization at all.
pub fn unoptimized(cfg: &SystemConfig, spec: UtilitySpec) -> Result<JointResult, Error> {
    cfg.validate()?;
    let u = Utility::new(spec, cfg.n_tx)?;
    let (p, q) = uniform_pair(cfg);
    let v = u.evaluate_modes(&snr_profile_vec(&p, &q, &cfg.channel_eigs));
    let mut trace = IterationTrace { converged: true, ..Default::default() };
    trace.iterations.push(IterationRecord {
        s: snr_profile_vec(&p, &q, &cfg.channel_eigs),
        p: p.clone(),
        q: q.clone(),
        utility: v.value,
        std_error: v.std_error,
    });
    Ok(finish(cfg, &u, p, q, v, trace))
}

/// Baseline with uniform pilots and an optimized precoder of per-slot
/// power μ.
pub fn precoder_only(cfg: &SystemConfig, spec: UtilitySpec) -> Result<JointResult, Error> {
    cfg.validate()?;
    let u = Utility::new(spec, cfg.n_tx)?;
    let (p, q0) = uniform_pair(cfg);
    let r = &cfg.channel_eigs;
    let v0 = u.evaluate_modes(&snr_profile_vec(&p, &q0, r));
    let sol = optimize_precoder_vec(&p, r, cfg.power, &u, Some(&q0));
    let (q, v) = if sol.value >= v0.value {
        let v = u.evaluate_modes(&sol.s);
        (sol.q, v)
    } else {
        (q0, v0)
    };
    let mut trace = IterationTrace { converged: true, ..Default::default() };
    trace.iterations.push(IterationRecord {
        s: snr_profile_vec(&p, &q, r),
        p: p.clone(),
        q: q.clone(),
        utility: v.value,
        std_error: v.std_error,
    });
    Ok(finish(cfg, &u, p, q, v, trace))
}
