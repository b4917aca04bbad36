//! JSON-configured experiments producing CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::SystemConfig;
use crate::joint::{
    is_rate, precoder_only, run_boost, run_fixed_budgets, run_full_fledged, unoptimized, JointOptions, JointResult,
};
use crate::pareto::{sample_border, BorderMode};
use crate::utility::UtilitySpec;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Boost,
    FixedBudgets,
    FullFledged,
    PrecoderOnly,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    pub mu_p: f64,
    pub mu_q: f64,
}

fn default_eps() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    500
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub utility: UtilitySpec,
    pub mode: Mode,
    #[serde(default)]
    pub budgets: Option<Budgets>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// SNR points in dB; each replaces `system.power`.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.system.validate()?;
        self.utility_spec().validate(self.system.n_tx)?;
        if !(self.eps > 0.0) {
            return Err(Error::Validation("eps must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Validation("max_iters must be positive".into()));
        }
        if self.mode == Mode::FixedBudgets {
            match self.budgets {
                Some(b) if b.mu_p > 0.0 && b.mu_q > 0.0 => {}
                _ => return Err(Error::Validation("fixed_budgets needs positive budgets.mu_p and budgets.mu_q".into())),
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation("sweep values must be finite".into()));
            }
        }
        Ok(())
    }

    /// Utility spec bound to the system's receive antennas and the seed.
    pub fn utility_spec(&self) -> UtilitySpec {
        UtilitySpec { n_rx: self.system.n_rx, master_seed: self.seed, ..self.utility }
    }

    pub fn options(&self) -> JointOptions {
        JointOptions { eps: self.eps, max_iters: self.max_iters }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Runs the configured mode on one system.
pub fn run_mode(mode: Mode, system: &SystemConfig, cfg: &ExperimentConfig) -> Result<JointResult, Error> {
    let spec = cfg.utility_spec();
    match mode {
        Mode::Boost => run_boost(system, spec, cfg.options()),
        Mode::FixedBudgets => {
            let b = cfg.budgets.ok_or_else(|| Error::Validation("missing budgets".into()))?;
            run_fixed_budgets(system, spec, b.mu_p, b.mu_q, cfg.options())
        }
        Mode::FullFledged => run_full_fledged(system, spec, cfg.options()),
        Mode::PrecoderOnly => precoder_only(system, spec),
        Mode::None => unoptimized(system, spec),
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..12).contains(&exp) {
        trim(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", trim(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let row: Vec<String> = cells.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| fmt_g(*x))
}

pub fn trace_csv(res: &JointResult, n: usize) -> String {
    let mut out = String::new();
    let header = ["iter", "utility", "std_error"].into_iter().map(String::from);
    push_row(&mut out, header.chain(numbered("p", n)).chain(numbered("q", n)).chain(numbered("s", n)));
    for (k, it) in res.trace.iterations.iter().enumerate() {
        let head = [k.to_string(), fmt_g(it.utility), fmt_g(it.std_error)];
        push_row(&mut out, head.into_iter().chain(nums(&it.p)).chain(nums(&it.q)).chain(nums(&it.s)));
    }
    out
}

pub fn result_csv(res: &JointResult, n: usize) -> String {
    let mut out = String::new();
    let header = [
        "t_tau_star",
        "utility",
        "std_error",
        "fresh_utility",
        "weight",
        "weighted_utility",
        "rank_star",
        "converged",
        "cycle_detected",
        "cycles",
    ]
    .into_iter()
    .map(String::from);
    push_row(&mut out, header.chain(numbered("p", n)).chain(numbered("q", n)).chain(numbered("s", n)));
    let head = [
        res.t_tau_star.to_string(),
        fmt_g(res.utility),
        fmt_g(res.std_error),
        fmt_g(res.fresh_utility),
        fmt_g(res.weight),
        fmt_g(res.weighted_utility()),
        res.rank_star.to_string(),
        res.trace.converged.to_string(),
        res.trace.cycle_detected.to_string(),
        res.trace.cycles().to_string(),
    ];
    push_row(&mut out, head.into_iter().chain(nums(&res.p_star)).chain(nums(&res.q_star)).chain(nums(&res.s_star)));
    out
}

/// Files to write, produced in full before anything touches the disk.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub exit_code: i32,
}

impl Outcome {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

pub fn cmd_optimize(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    cfg.validate()?;
    let res = run_mode(cfg.mode, &cfg.system, cfg)?;
    let n = cfg.system.n_tx;
    Ok(Outcome {
        exit_code: if res.trace.cycle_detected { 2 } else { 0 },
        files: vec![("trace.csv".into(), trace_csv(&res, n)), ("result.csv".into(), result_csv(&res, n))],
    })
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub snr_db: f64,
    /// Joint, precoder-only and unoptimized, in reporting units.
    pub values: [f64; 3],
    pub std_errors: [f64; 3],
    pub cycle_detected: bool,
    pub converged: bool,
    /// Nonzero entries of the joint p★ and q★.
    pub joint_counts: (usize, usize),
}

/// Reporting units: weighted rate in bits for rate utilities, the MSE
/// itself (the negated utility) for error utilities.
fn report(res: &JointResult, cfg: &ExperimentConfig) -> (f64, f64) {
    if is_rate(cfg.utility.kind) {
        let ln2 = std::f64::consts::LN_2;
        (res.weighted_utility() / ln2, res.weighted_std_error() / ln2)
    } else {
        (-res.utility, res.std_error)
    }
}

pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, Error> {
    cfg.validate()?;
    let points = cfg.sweep.clone().unwrap_or_default();
    if points.is_empty() {
        return Err(Error::Validation("sweep list must be non-empty".into()));
    }
    let joint_mode = match cfg.mode {
        Mode::FullFledged | Mode::FixedBudgets => cfg.mode,
        _ => Mode::Boost,
    };
    let mut rows: Vec<SweepRow> = points
        .par_iter()
        .map(|&db| {
            let system = cfg.system.with_power(10f64.powf(db / 10.0));
            let joint = run_mode(joint_mode, &system, cfg)?;
            let pre = run_mode(Mode::PrecoderOnly, &system, cfg)?;
            let none = run_mode(Mode::None, &system, cfg)?;
            let (a, b, c) = (report(&joint, cfg), report(&pre, cfg), report(&none, cfg));
            Ok(SweepRow {
                snr_db: db,
                values: [a.0, b.0, c.0],
                std_errors: [a.1, b.1, c.1],
                cycle_detected: joint.trace.cycle_detected,
                converged: joint.trace.converged,
                joint_counts: joint.nonzero_counts(),
            })
        })
        .collect::<Result<_, Error>>()?;
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("snr_db,rate_joint,rate_precoder_only,rate_none,se_joint,se_precoder,se_none\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_g(r.snr_db),
            fmt_g(r.values[0]),
            fmt_g(r.values[1]),
            fmt_g(r.values[2]),
            fmt_g(r.std_errors[0]),
            fmt_g(r.std_errors[1]),
            fmt_g(r.std_errors[2])
        );
    }
    out
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let rows = sweep_rows(cfg)?;
    Ok(Outcome {
        exit_code: if rows.iter().any(|r| r.cycle_detected) { 2 } else { 0 },
        files: vec![("sweep.csv".into(), sweep_csv(&rows))],
    })
}

pub fn cmd_pareto(cfg: &ExperimentConfig, n_dirs: usize) -> Result<Outcome, Error> {
    cfg.validate()?;
    let mode = match (cfg.mode, cfg.budgets) {
        (Mode::FixedBudgets, Some(b)) => BorderMode::FixedBudgets { mu_p: b.mu_p, mu_q: b.mu_q },
        _ => BorderMode::Boost,
    };
    let border = sample_border(n_dirs, mode, &cfg.system)?;
    let n = cfg.system.n_tx;
    let mut out = String::new();
    let header = numbered("e", n).chain(std::iter::once("nu".to_string()));
    push_row(&mut out, header.chain(numbered("p", n)).chain(numbered("q", n)).chain(numbered("s", n)));
    for ray in &border {
        let head = nums(ray.e.as_slice()).chain(std::iter::once(fmt_g(ray.nu)));
        push_row(&mut out, head.chain(nums(&ray.p)).chain(nums(&ray.q)).chain(nums(&ray.s)));
    }
    Ok(Outcome { exit_code: 0, files: vec![("border.csv".into(), out)] })
}

/// Thread pool honoring `TRAINPRECODE_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("TRAINPRECODE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Validation(format!("TRAINPRECODE_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Validation(format!("thread pool: {e}")))
}
