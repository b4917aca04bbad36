//! Utilities of the effective-SNR profile.
//!
//! Monte Carlo kinds average over a frozen set of whitened channel draws, so
//! that for a fixed seed each utility is a deterministic smooth function of
//! the profile and its analytic gradient is exact for that function.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_seed, sample_whitened};
use crate::hermitian::{eig_hermitian, inv_hpd, CMat, HermitianMatrix, C64};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityKind {
    /// E log det(I + W S Wᴴ).
    MutualInfo,
    /// −(r − N_R + E tr (I + W S Wᴴ)⁻¹).
    MmseBound,
    Trace,
    Det,
    /// log det(I + ν S).
    LogdetShifted { nu: f64 },
    /// tr(S⁻¹)⁻¹.
    Harmonic,
    /// E det(I + W S Wᴴ).
    ExpectedDet,
    /// E log det of the smaller Gram of W S^{1/2}.
    LogDetLower,
    /// E det of the smaller Gram of W S^{1/2}.
    ExpectedDetGram,
    /// tr E (S⁻¹ + WᴴW)⁻¹.
    RegularizedMse,
    /// N_R log(1 + N_T tr S).
    JensenUpper1,
    /// log det(I + N_T N_R S).
    JensenUpper2,
    /// n log(1 + exp(LogDetLower / n)), n = min(N_T, N_R).
    MinkowskiLower,
}

impl UtilityKind {
    pub fn is_monte_carlo(&self) -> bool {
        matches!(
            self,
            Self::MutualInfo
                | Self::MmseBound
                | Self::ExpectedDet
                | Self::LogDetLower
                | Self::ExpectedDetGram
                | Self::RegularizedMse
                | Self::MinkowskiLower
        )
    }

    /// Concave in the profile, so ascent over a convex set is global.
    pub fn is_concave(&self) -> bool {
        !matches!(self, Self::Det | Self::ExpectedDet | Self::ExpectedDetGram | Self::MinkowskiLower)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::MutualInfo => "mutual_info",
            Self::MmseBound => "mmse_bound",
            Self::Trace => "trace",
            Self::Det => "det",
            Self::LogdetShifted { .. } => "logdet_shifted",
            Self::Harmonic => "harmonic",
            Self::ExpectedDet => "expected_det",
            Self::LogDetLower => "log_det_lower",
            Self::ExpectedDetGram => "expected_det_gram",
            Self::RegularizedMse => "regularized_mse",
            Self::JensenUpper1 => "jensen_upper_1",
            Self::JensenUpper2 => "jensen_upper_2",
            Self::MinkowskiLower => "minkowski_lower",
        }
    }
}

fn default_streams() -> usize {
    1
}
fn default_n_rx() -> usize {
    1
}
fn default_samples() -> usize {
    10_000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    #[serde(flatten)]
    pub kind: UtilityKind,
    #[serde(default = "default_streams")]
    pub streams: usize,
    #[serde(default = "default_n_rx")]
    pub n_rx: usize,
    #[serde(default = "default_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl UtilitySpec {
    pub fn new(kind: UtilityKind, n_rx: usize) -> Self {
        Self { kind, streams: 1, n_rx, mc_samples: default_samples(), master_seed: 0 }
    }

    pub fn samples(self, n: usize) -> Self {
        Self { mc_samples: n, ..self }
    }

    pub fn seed(self, seed: u64) -> Self {
        Self { master_seed: seed, ..self }
    }

    pub fn streams(self, r: usize) -> Self {
        Self { streams: r, ..self }
    }

    pub fn validate(&self, n_tx: usize) -> Result<(), Error> {
        if self.n_rx == 0 || n_tx == 0 {
            return Err(Error::Validation("antenna counts must be positive".into()));
        }
        if self.kind.is_monte_carlo() && self.mc_samples < 2 {
            return Err(Error::Validation("mc_samples must be at least 2".into()));
        }
        if self.kind == UtilityKind::MmseBound && (self.streams == 0 || self.streams > n_tx) {
            return Err(Error::Validation(format!("streams must lie in 1..={n_tx}")));
        }
        if let UtilityKind::LogdetShifted { nu } = self.kind {
            if !(nu >= 0.0) {
                return Err(Error::Validation("logdet_shifted needs nu >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilityValue {
    pub value: f64,
    /// Monte Carlo standard error; 0 for deterministic kinds.
    pub std_error: f64,
    /// Set when the profile sits on a singular point (−∞ or limit value).
    pub singular: bool,
}

impl UtilityValue {
    fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, singular: false }
    }
}

/// Per-sample channel data reused across evaluations.
#[derive(Clone, Debug)]
struct Sample {
    w: CMat,
    gram: CMat,
    /// For two transmit antennas: (G11, G22, |G12|², det G).
    g2: [f64; 4],
}

/// A utility bound to a transmit dimension and a frozen sample set.
#[derive(Clone, Debug)]
pub struct Utility {
    spec: UtilitySpec,
    n_tx: usize,
    samples: Vec<Sample>,
}

impl Utility {
    pub fn new(spec: UtilitySpec, n_tx: usize) -> Result<Self, Error> {
        spec.validate(n_tx)?;
        let samples = if spec.kind.is_monte_carlo() {
            (0..spec.mc_samples as u64)
                .map(|n| {
                    let w = sample_whitened(spec.n_rx, n_tx, derive_seed(spec.master_seed, n));
                    let gram = w.adjoint() * &w;
                    let g2 = if n_tx == 2 {
                        let (a, b, c) = (gram[(0, 0)].re, gram[(1, 1)].re, gram[(0, 1)].norm_sqr());
                        [a, b, c, a * b - c]
                    } else {
                        [0.0; 4]
                    };
                    Sample { w, gram, g2 }
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self { spec, n_tx, samples })
    }

    pub fn spec(&self) -> &UtilitySpec {
        &self.spec
    }

    pub fn kind(&self) -> UtilityKind {
        self.spec.kind
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Same utility over an independent sample set.
    pub fn reseeded(&self, seed: u64) -> Result<Self, Error> {
        Self::new(self.spec.seed(seed), self.n_tx)
    }

    fn check_len(&self, s: &[f64]) {
        assert_eq!(s.len(), self.n_tx, "profile length must equal the transmit dimension");
    }

    pub fn evaluate(&self, s: &[f64]) -> UtilityValue {
        self.check_len(s);
        let n_r = self.spec.n_rx as f64;
        let n_t = self.n_tx as f64;
        match self.spec.kind {
            UtilityKind::Trace => UtilityValue::exact(s.iter().sum()),
            UtilityKind::Det => UtilityValue::exact(s.iter().product()),
            UtilityKind::LogdetShifted { nu } => UtilityValue::exact(s.iter().map(|x| (nu * x).ln_1p()).sum()),
            UtilityKind::Harmonic => {
                if s.iter().any(|&x| x <= 0.0) {
                    UtilityValue { value: 0.0, std_error: 0.0, singular: true }
                } else {
                    UtilityValue::exact(1.0 / s.iter().map(|x| 1.0 / x).sum::<f64>())
                }
            }
            UtilityKind::JensenUpper1 => UtilityValue::exact(n_r * (n_t * s.iter().sum::<f64>()).ln_1p()),
            UtilityKind::JensenUpper2 => UtilityValue::exact(s.iter().map(|x| (n_t * n_r * x).ln_1p()).sum()),
            UtilityKind::MutualInfo => {
                if s.iter().all(|&x| x == 0.0) {
                    return UtilityValue { value: 0.0, std_error: 0.0, singular: false };
                }
                self.average(|smp| self.mi_sample(smp, s))
            }
            UtilityKind::MmseBound => {
                let r = self.spec.streams as f64;
                let v = self.average(|smp| self.trace_inv_sample(smp, s));
                UtilityValue { value: -(r - n_t + v.value), ..v }
            }
            UtilityKind::ExpectedDet => self.average(|smp| self.det_sample(smp, s)),
            UtilityKind::LogDetLower => {
                if self.lower_singular(s) {
                    return UtilityValue { value: f64::NEG_INFINITY, std_error: 0.0, singular: true };
                }
                self.average(|smp| self.lower_logdet_sample(smp, s))
            }
            UtilityKind::ExpectedDetGram => {
                if self.lower_singular(s) {
                    return UtilityValue { value: 0.0, std_error: 0.0, singular: true };
                }
                self.average(|smp| self.lower_logdet_sample(smp, s).exp())
            }
            UtilityKind::RegularizedMse => {
                if s.iter().any(|&x| x <= 0.0) {
                    return UtilityValue { value: f64::NEG_INFINITY, std_error: 0.0, singular: true };
                }
                self.average(|smp| self.regularized_sample(smp, s).0)
            }
            UtilityKind::MinkowskiLower => {
                let n = self.min_dim() as f64;
                if self.lower_singular(s) {
                    return UtilityValue { value: 0.0, std_error: 0.0, singular: true };
                }
                let l = self.average(|smp| self.lower_logdet_sample(smp, s));
                let x = l.value / n;
                let d = sigmoid(x);
                UtilityValue { value: n * softplus(x), std_error: d * l.std_error, singular: false }
            }
        }
    }

    pub fn gradient(&self, s: &[f64]) -> Result<Vec<f64>, Error> {
        self.check_len(s);
        let n_r = self.spec.n_rx as f64;
        let n_t = self.n_tx as f64;
        let any_zero = s.iter().any(|&x| x <= 0.0);
        let singular = |what: &str| Err(Error::NonDifferentiable(format!("{what} at a singular profile")));
        match self.spec.kind {
            UtilityKind::Trace => Ok(vec![1.0; s.len()]),
            UtilityKind::Det => {
                if any_zero {
                    return singular("det");
                }
                let p: f64 = s.iter().product();
                Ok(s.iter().map(|x| p / x).collect())
            }
            UtilityKind::LogdetShifted { nu } => Ok(s.iter().map(|x| nu / (1.0 + nu * x)).collect()),
            UtilityKind::Harmonic => {
                if any_zero {
                    return singular("harmonic");
                }
                let h = 1.0 / s.iter().map(|x| 1.0 / x).sum::<f64>();
                Ok(s.iter().map(|x| h * h / (x * x)).collect())
            }
            UtilityKind::JensenUpper1 => {
                let g = n_r * n_t / (1.0 + n_t * s.iter().sum::<f64>());
                Ok(vec![g; s.len()])
            }
            UtilityKind::JensenUpper2 => Ok(s.iter().map(|x| n_t * n_r / (1.0 + n_t * n_r * x)).collect()),
            UtilityKind::MutualInfo => Ok(self.average_vec(|smp, out| self.mi_grad_sample(smp, s, out))),
            UtilityKind::MmseBound => Ok(self.average_vec(|smp, out| self.mmse_grad_sample(smp, s, out))),
            UtilityKind::ExpectedDet => Ok(self.average_vec(|smp, out| self.det_grad_sample(smp, s, out))),
            UtilityKind::LogDetLower => {
                if self.lower_singular(s) {
                    return singular("log_det_lower");
                }
                Ok(self.average_vec(|smp, out| self.lower_grad_sample(smp, s, out, false)))
            }
            UtilityKind::ExpectedDetGram => {
                if self.lower_singular(s) {
                    return singular("expected_det_gram");
                }
                Ok(self.average_vec(|smp, out| self.lower_grad_sample(smp, s, out, true)))
            }
            UtilityKind::RegularizedMse => {
                if any_zero {
                    return singular("regularized_mse");
                }
                Ok(self.average_vec(|smp, out| {
                    let g = self.regularized_sample(smp, s).1;
                    for (o, v) in out.iter_mut().zip(g) {
                        *o += v;
                    }
                }))
            }
            UtilityKind::MinkowskiLower => {
                if self.lower_singular(s) {
                    return singular("minkowski_lower");
                }
                let n = self.min_dim() as f64;
                let l = self.average(|smp| self.lower_logdet_sample(smp, s)).value;
                let d = sigmoid(l / n);
                let g = self.average_vec(|smp, out| self.lower_grad_sample(smp, s, out, false));
                Ok(g.into_iter().map(|v| d * v).collect())
            }
        }
    }

    /// Value at the sorted version of a mode-indexed profile, padded with
    /// zeros up to the transmit dimension.
    pub fn evaluate_modes(&self, s: &[f64]) -> UtilityValue {
        let (sorted, _) = sort_padded(s, self.n_tx);
        self.evaluate(&sorted)
    }

    /// Gradient of `evaluate_modes` in the caller's mode order.
    pub fn gradient_modes(&self, s: &[f64]) -> Option<Vec<f64>> {
        let (sorted, order) = sort_padded(s, self.n_tx);
        let g = self.gradient(&sorted).ok()?;
        let mut out = vec![0.0; s.len()];
        for (k, &i) in order.iter().enumerate() {
            if i < s.len() {
                out[i] = g[k];
            }
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn min_dim(&self) -> usize {
        self.n_tx.min(self.spec.n_rx)
    }

    fn lower_singular(&self, s: &[f64]) -> bool {
        s.iter().filter(|&&x| x > 0.0).count() < self.min_dim()
    }

    fn average(&self, f: impl Fn(&Sample) -> f64) -> UtilityValue {
        let vals: Vec<f64> = self.samples.iter().map(f).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        UtilityValue { value: mean, std_error: (var / n).sqrt(), singular: false }
    }

    fn average_vec(&self, f: impl Fn(&Sample, &mut [f64])) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_tx];
        for smp in &self.samples {
            f(smp, &mut acc);
        }
        let n = self.samples.len() as f64;
        acc.iter_mut().for_each(|v| *v /= n);
        acc
    }

    /// I + G D as a dense matrix.
    fn shifted(&self, smp: &Sample, s: &[f64]) -> CMat {
        let n = self.n_tx;
        let mut a = CMat::identity(n, n);
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] += smp.gram[(i, j)] * s[j];
            }
        }
        a
    }

    /// log det(I + D^{1/2} G D^{1/2}).
    fn mi_sample(&self, smp: &Sample, s: &[f64]) -> f64 {
        match self.n_tx {
            1 => (smp.gram[(0, 0)].re * s[0]).ln_1p(),
            2 => {
                let [a, b, _, d] = smp.g2;
                (a * s[0] + b * s[1] + s[0] * s[1] * d).ln_1p()
            }
            _ => log_det_hpd(&self.hermitian_shifted(smp, s)),
        }
    }

    fn det_sample(&self, smp: &Sample, s: &[f64]) -> f64 {
        match self.n_tx {
            1 => 1.0 + smp.gram[(0, 0)].re * s[0],
            2 => {
                let [a, b, _, d] = smp.g2;
                1.0 + a * s[0] + b * s[1] + s[0] * s[1] * d
            }
            _ => log_det_hpd(&self.hermitian_shifted(smp, s)).exp(),
        }
    }

    /// tr (I + D^{1/2} G D^{1/2})⁻¹.
    fn trace_inv_sample(&self, smp: &Sample, s: &[f64]) -> f64 {
        match self.n_tx {
            1 => 1.0 / (1.0 + smp.gram[(0, 0)].re * s[0]),
            2 => {
                let [a, b, _, d] = smp.g2;
                let det = 1.0 + a * s[0] + b * s[1] + s[0] * s[1] * d;
                (2.0 + a * s[0] + b * s[1]) / det
            }
            _ => inv_hpd(&self.hermitian_shifted(smp, s)).expect("I + D½GD½ is positive definite").trace().re,
        }
    }

    fn hermitian_shifted(&self, smp: &Sample, s: &[f64]) -> CMat {
        let n = self.n_tx;
        let r: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
        let mut a = CMat::identity(n, n);
        for j in 0..n {
            for i in 0..n {
                a[(i, j)] += smp.gram[(i, j)] * (r[i] * r[j]);
            }
        }
        a
    }

    fn mi_grad_sample(&self, smp: &Sample, s: &[f64], out: &mut [f64]) {
        match self.n_tx {
            1 => {
                let g = smp.gram[(0, 0)].re;
                out[0] += g / (1.0 + g * s[0]);
            }
            2 => {
                let [a, b, _, d] = smp.g2;
                let det = 1.0 + a * s[0] + b * s[1] + s[0] * s[1] * d;
                out[0] += (a + s[1] * d) / det;
                out[1] += (b + s[0] * d) / det;
            }
            _ => {
                // [(I + GD)⁻¹ G]_ii
                let y = self.shifted(smp, s).lu().solve(&smp.gram).expect("I + GD is invertible");
                for (i, o) in out.iter_mut().enumerate() {
                    *o += y[(i, i)].re;
                }
            }
        }
    }

    fn mmse_grad_sample(&self, smp: &Sample, s: &[f64], out: &mut [f64]) {
        match self.n_tx {
            1 => {
                let g = smp.gram[(0, 0)].re;
                let det = 1.0 + g * s[0];
                out[0] += g / (det * det);
            }
            2 => {
                let [a, b, _, d] = smp.g2;
                let det = 1.0 + a * s[0] + b * s[1] + s[0] * s[1] * d;
                let u = 2.0 + a * s[0] + b * s[1];
                out[0] -= (a * det - u * (a + s[1] * d)) / (det * det);
                out[1] -= (b * det - u * (b + s[0] * d)) / (det * det);
            }
            _ => {
                // [A⁻² G]_ii with A = I + GD
                let lu = self.shifted(smp, s).lu();
                let y = lu.solve(&smp.gram).expect("I + GD is invertible");
                let y = lu.solve(&y).expect("I + GD is invertible");
                for (i, o) in out.iter_mut().enumerate() {
                    *o += y[(i, i)].re;
                }
            }
        }
    }

    fn det_grad_sample(&self, smp: &Sample, s: &[f64], out: &mut [f64]) {
        match self.n_tx {
            1 => out[0] += smp.gram[(0, 0)].re,
            2 => {
                let [a, b, _, d] = smp.g2;
                out[0] += a + s[1] * d;
                out[1] += b + s[0] * d;
            }
            _ => {
                let det = self.det_sample(smp, s);
                let y = self.shifted(smp, s).lu().solve(&smp.gram).expect("I + GD is invertible");
                for (i, o) in out.iter_mut().enumerate() {
                    *o += det * y[(i, i)].re;
                }
            }
        }
    }

    /// log det of the smaller Gram: W D Wᴴ if N_T ≥ N_R, else D G.
    fn lower_logdet_sample(&self, smp: &Sample, s: &[f64]) -> f64 {
        if self.n_tx >= self.spec.n_rx {
            log_det_hpd(&weighted_outer(&smp.w, s))
        } else {
            s.iter().map(|x| x.ln()).sum::<f64>() + log_det_hpd(&smp.gram)
        }
    }

    fn lower_grad_sample(&self, smp: &Sample, s: &[f64], out: &mut [f64], exp: bool) {
        let scale = if exp { self.lower_logdet_sample(smp, s).exp() } else { 1.0 };
        if self.n_tx >= self.spec.n_rx {
            // w_iᴴ (W D Wᴴ)⁻¹ w_i
            let inv = inv_hpd(&weighted_outer(&smp.w, s)).expect("W D Wᴴ is positive definite");
            let y = &inv * &smp.w;
            for (i, o) in out.iter_mut().enumerate() {
                let v: C64 = smp.w.column(i).iter().zip(y.column(i).iter()).map(|(a, b)| a.conj() * b).sum();
                *o += scale * v.re;
            }
        } else {
            for (o, x) in out.iter_mut().zip(s) {
                *o += scale / x;
            }
        }
    }

    /// tr (D⁻¹ + G)⁻¹ and its gradient [N⁻²]_ii / s_i².
    fn regularized_sample(&self, smp: &Sample, s: &[f64]) -> (f64, Vec<f64>) {
        let mut n = smp.gram.clone();
        for (i, x) in s.iter().enumerate() {
            n[(i, i)] += C64::new(1.0 / x, 0.0);
        }
        let inv = inv_hpd(&n).expect("D⁻¹ + G is positive definite");
        let sq = &inv * &inv;
        let g = s.iter().enumerate().map(|(i, x)| sq[(i, i)].re / (x * x)).collect();
        (inv.trace().re, g)
    }
}

/// Non-increasing copy of `s` padded to `n`, with the source index of each entry.
pub fn sort_padded(s: &[f64], n: usize) -> (Vec<f64>, Vec<usize>) {
    assert!(s.len() <= n, "profile longer than the transmit dimension");
    let mut order: Vec<usize> = (0..n).collect();
    let at = |i: usize| if i < s.len() { s[i] } else { 0.0 };
    order.sort_by(|&i, &j| at(j).total_cmp(&at(i)));
    (order.iter().map(|&i| at(i)).collect(), order)
}

fn weighted_outer(w: &CMat, s: &[f64]) -> CMat {
    let mut ws = w.clone();
    for (j, x) in s.iter().enumerate() {
        ws.column_mut(j).scale_mut(*x);
    }
    let m = ws * w.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// log det of a Hermitian positive semidefinite matrix; −∞ when singular.
fn log_det_hpd(a: &CMat) -> f64 {
    match a.clone().cholesky() {
        Some(c) => {
            let l: &DMatrix<C64> = c.l_dirty();
            (0..a.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
        }
        None => {
            let e = eig_hermitian(&HermitianMatrix::symmetrized(a));
            e.values.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).sum()
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Evaluates `spec` at `s` with a sample set sized to `s`.
pub fn evaluate(spec: &UtilitySpec, s: &[f64]) -> Result<UtilityValue, Error> {
    Ok(Utility::new(*spec, s.len())?.evaluate(s))
}

pub fn gradient(spec: &UtilitySpec, s: &[f64]) -> Result<Vec<f64>, Error> {
    Utility::new(*spec, s.len())?.gradient(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc(kind: UtilityKind, n_rx: usize, n: usize) -> UtilitySpec {
        UtilitySpec::new(kind, n_rx).samples(n).seed(11)
    }

    #[test]
    fn exact_examples() {
        assert_eq!(evaluate(&mc(UtilityKind::MutualInfo, 2, 100), &[0.0, 0.0]).unwrap().value, 0.0);
        let m = evaluate(&mc(UtilityKind::MmseBound, 2, 100).streams(2), &[0.0, 0.0]).unwrap();
        assert_eq!(m.value, -2.0);
        assert_eq!(evaluate(&mc(UtilityKind::Trace, 1, 1), &[3.0, 1.0]).unwrap().value, 4.0);
        assert_eq!(gradient(&mc(UtilityKind::Trace, 1, 1), &[3.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn singular_points() {
        let v = evaluate(&mc(UtilityKind::LogDetLower, 2, 10), &[1.0, 0.0]).unwrap();
        assert!(v.value == f64::NEG_INFINITY && v.singular);
        let v = evaluate(&mc(UtilityKind::MinkowskiLower, 2, 10), &[0.0, 0.0]).unwrap();
        assert!(v.value == 0.0 && v.singular);
        assert!(gradient(&mc(UtilityKind::Det, 1, 1), &[1.0, 0.0]).is_err());
        assert!(gradient(&mc(UtilityKind::ExpectedDetGram, 2, 10), &[1.0, 0.0]).is_err());
        let v = evaluate(&mc(UtilityKind::RegularizedMse, 2, 10), &[1.0, 0.0]).unwrap();
        assert!(v.value == f64::NEG_INFINITY && v.singular);
    }

    #[test]
    fn mi_gradient_at_zero_is_mean_power() {
        let g = gradient(&mc(UtilityKind::MutualInfo, 1, 20_000), &[0.0, 0.0]).unwrap();
        for v in g {
            assert!((v - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn fast_paths_match_general_path() {
        // general path exercised through three transmit antennas with a zero mode
        for kind in [UtilityKind::MutualInfo, UtilityKind::MmseBound, UtilityKind::ExpectedDet] {
            let spec = mc(kind, 2, 200).streams(2);
            let u2 = Utility::new(spec, 2).unwrap();
            let u3 = Utility::new(spec, 3).unwrap();
            let s2 = [0.7, 0.2];
            let s3 = [0.7, 0.2, 0.0];
            let a = u2.evaluate(&s2).value;
            let b = u3.evaluate(&s3).value;
            // column 3 is an extra draw; the first two columns coincide
            assert!((a - b).abs() < 1e-12, "{kind:?} {a} {b}");
            let ga = u2.gradient(&s2).unwrap();
            let gb = u3.gradient(&s3).unwrap();
            assert!((ga[0] - gb[0]).abs() < 1e-12 && (ga[1] - gb[1]).abs() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = mc(UtilityKind::MutualInfo, 2, 500);
        let a = evaluate(&spec, &[1.0, 0.5]).unwrap();
        let b = evaluate(&spec, &[1.0, 0.5]).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = evaluate(&spec.seed(12), &[1.0, 0.5]).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn spec_json_shape() {
        let spec: UtilitySpec =
            serde_json::from_str(r#"{"kind":"logdet_shifted","nu":2.0,"n_rx":2,"mc_samples":10}"#).unwrap();
        assert_eq!(spec.kind, UtilityKind::LogdetShifted { nu: 2.0 });
        assert_eq!(spec.mc_samples, 10);
    }
}
