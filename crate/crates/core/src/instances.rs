//! Seeded random problem instances for examples, tests and benchmarks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hermitian::{CMat, HermitianMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(k * re, k * im)
    })
}

/// Haar-like unitary from the QR factor of a Gaussian matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    let g = complex_gaussian(rng, n, n);
    g.qr().q()
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianMatrix {
    let g = complex_gaussian(rng, n, n);
    HermitianMatrix::symmetrized(&g)
}

/// PSD matrix of the given rank with eigenvalues drawn from [lo, hi].
pub fn psd_with_rank(rng: &mut ChaCha8Rng, n: usize, rank: usize, lo: f64, hi: f64) -> HermitianMatrix {
    let u = unitary(rng, n);
    let mut d = vec![0.0; n];
    for v in d.iter_mut().take(rank) {
        *v = rng.random_range(lo..hi);
    }
    conjugate_diag(&u, &d)
}

/// U diag(d) Uᴴ, symmetrized.
pub fn conjugate_diag(u: &CMat, d: &[f64]) -> HermitianMatrix {
    let mut s = u.clone();
    for (k, &v) in d.iter().enumerate() {
        s.column_mut(k).scale_mut(v);
    }
    HermitianMatrix::symmetrized(&(s * u.adjoint()))
}

/// PSD matrix scaled to the given trace.
pub fn psd_with_trace(rng: &mut ChaCha8Rng, n: usize, rank: usize, trace: f64) -> HermitianMatrix {
    let m = psd_with_rank(rng, n, rank, 0.05, 1.0);
    let t = m.trace();
    m.scaled(trace / t)
}

/// Channel eigenvalues sorted non-increasing, normalized to unit sum.
pub fn channel_eigs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    r.sort_by(|a, b| b.total_cmp(a));
    let t: f64 = r.iter().sum();
    r.iter().map(|x| x / t).collect()
}
