use proptest::prelude::*;
use rand::RngExt;

use trainprecode::channel::{effective_snr, estimation_covariances, snr_profile_vec, GramRole};
use trainprecode::hermitian::{eig_hermitian, frobenius, gevp, numerical_rank, pinv, range_projector, psd_eigen};
use trainprecode::joint::{run_boost, run_fixed_budgets, JointOptions};
use trainprecode::oracle::{quadrature_1x1_with, QuadKind, QuadScheme};
use trainprecode::pareto::{dominates, nu, nu_reciprocal, sample_border, BorderMode, Direction};
use trainprecode::pilot::{optimize_pilot, EstimateCovDomain};
use trainprecode::precoder::{optimize_precoder, simplex_region, InvertMode, LinearFractionalMap};
use trainprecode::{instances, CMat, ChannelCovariance, GramMatrix, HermitianMatrix, SystemConfig, Utility, UtilityKind, UtilitySpec, C64};

fn channel(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> ChannelCovariance {
    let eigs = instances::channel_eigs(rng, n);
    let u = instances::unitary(rng, n);
    ChannelCovariance::new(instances::conjugate_diag(&u, &eigs)).unwrap()
}

fn min_eig(m: &CMat) -> f64 {
    *eig_hermitian(&HermitianMatrix::symmetrized(m)).values.last().unwrap()
}

fn cfg2(power: f64, r: &[f64]) -> SystemConfig {
    SystemConfig {
        n_tx: r.len(),
        n_rx: 2,
        coherence_time: 10,
        training_duration: r.len(),
        power,
        channel_eigs: r.to_vec(),
    }
}

const ALL_KINDS: [UtilityKind; 13] = [
    UtilityKind::MutualInfo,
    UtilityKind::MmseBound,
    UtilityKind::Trace,
    UtilityKind::Det,
    UtilityKind::LogdetShifted { nu: 1.5 },
    UtilityKind::Harmonic,
    UtilityKind::ExpectedDet,
    UtilityKind::LogDetLower,
    UtilityKind::ExpectedDetGram,
    UtilityKind::RegularizedMse,
    UtilityKind::JensenUpper1,
    UtilityKind::JensenUpper2,
    UtilityKind::MinkowskiLower,
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn penrose_identities(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
        let mut rng = instances::rng(seed);
        let rank = rng.random_range(0..=rows.min(cols));
        let a = instances::complex_gaussian(&mut rng, rows, rank) * instances::complex_gaussian(&mut rng, rank, cols);
        let x = pinv(&a);
        let na = frobenius(&a).max(1e-300);
        let nx = frobenius(&x).max(1e-300);
        prop_assert!(frobenius(&(&a * &x * &a - &a)) <= 1e-9 * na);
        prop_assert!(frobenius(&(&x * &a * &x - &x)) <= 1e-9 * nx);
        let ax = &a * &x;
        let xa = &x * &a;
        prop_assert!(frobenius(&(ax.adjoint() - &ax)) <= 1e-9 * frobenius(&ax).max(1.0));
        prop_assert!(frobenius(&(xa.adjoint() - &xa)) <= 1e-9 * frobenius(&xa).max(1.0));
    }

    #[test]
    fn eigen_basis_and_reconstruction(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = instances::rng(seed);
        for a in [instances::hermitian(&mut rng, n), instances::psd_with_rank(&mut rng, n, n / 2, 0.1, 3.0)] {
            let e = eig_hermitian(&a);
            let v = &e.basis;
            prop_assert!(frobenius(&(v.adjoint() * v - CMat::identity(n, n))) <= 1e-10);
            prop_assert!(frobenius(&(e.reconstruct() - a.matrix())) <= 1e-10 * frobenius(a.matrix()).max(1.0));
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn gevp_residuals(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = instances::rng(seed);
        let a = { let k = rng.random_range(0..=n); let t = 0.1; instances::psd_with_rank(&mut rng, n, k, t, 3.0) };
        let b = instances::psd_with_rank(&mut rng, n, n, 0.2, 2.0);
        let e = gevp(&a, &b).unwrap();
        let (na, nb) = (frobenius(a.matrix()), frobenius(b.matrix()));
        for (i, w) in e.values.iter().enumerate() {
            let v = e.basis.column(i);
            let res = a.matrix() * v - b.matrix() * v * C64::new(*w, 0.0);
            prop_assert!(res.norm() <= 1e-8 * (na + w.abs() * nb));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, ..ProptestConfig::default() })]

    #[test]
    fn snr_grows_with_pilot_and_transmit_power(seed in any::<u64>(), n in 1usize..4, k in 0.0f64..2.0, dk in 0.05f64..2.0) {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, n);
        let p = instances::psd_with_rank(&mut rng, n, n, 0.2, 2.0);
        let q = instances::psd_with_rank(&mut rng, n, n, 0.2, 2.0);
        let gram = |m: &HermitianMatrix, role| GramMatrix::unbounded(m.clone(), role).unwrap();
        let s = |kp: f64, kq: f64| effective_snr(&gram(&p.scaled(kp), GramRole::Pilot), &gram(&q.scaled(kq), GramRole::Transmit), &r);
        let (lo, hi) = (s(k, 1.0), s(k + dk, 1.0));
        prop_assert!(min_eig(&(hi.s.matrix() - lo.s.matrix())) > -1e-10);
        prop_assert!(hi.profile.iter().zip(&lo.profile).all(|(a, b)| *a > *b));
        let (lo, hi) = (s(1.0, k), s(1.0, k + dk));
        prop_assert!(min_eig(&(hi.s.matrix() - lo.s.matrix())) > -1e-10);
        // P' − P positive definite
        let extra = instances::psd_with_rank(&mut rng, n, n, 0.05, 1.0);
        let p2 = gram(&HermitianMatrix::symmetrized(&(p.matrix() + extra.matrix())), GramRole::Pilot);
        let big = effective_snr(&p2, &gram(&q, GramRole::Transmit), &r);
        let small = effective_snr(&gram(&p, GramRole::Pilot), &gram(&q, GramRole::Transmit), &r);
        prop_assert!(big.profile.iter().zip(&small.profile).all(|(a, b)| *a > *b));
    }

    #[test]
    fn estimate_rank_equals_pilot_rank(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, n);
        let rank = rng.random_range(0..n);
        let p = GramMatrix::pilot(instances::psd_with_rank(&mut rng, n, rank, 0.1, 3.0)).unwrap();
        let cov = estimation_covariances(&p, &r);
        prop_assert_eq!(numerical_rank(&eig_hermitian(&cov.r_hat).values), p.rank());
    }

    #[test]
    fn matrix_and_vector_paths_agree(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = instances::rng(seed);
        let eigs = instances::channel_eigs(&mut rng, n);
        let u = instances::unitary(&mut rng, n);
        let r = ChannelCovariance::new(instances::conjugate_diag(&u, &eigs)).unwrap();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let pm = GramMatrix::pilot(instances::conjugate_diag(&u, &p)).unwrap();
        let qm = GramMatrix::transmit(instances::conjugate_diag(&u, &q)).unwrap();
        let mut v = snr_profile_vec(&p, &q, &eigs);
        v.sort_by(|a, b| b.total_cmp(a));
        let m = effective_snr(&pm, &qm, &r).profile;
        for (a, b) in v.iter().zip(&m) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn utility_permutation_invariance_and_monotonicity(seed in any::<u64>()) {
        let mut rng = instances::rng(seed);
        let s: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..3.0)).collect();
        let bump: Vec<f64> = s.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
        let mut perm = s.clone();
        perm.rotate_left(1 + (seed % 2) as usize);
        for kind in ALL_KINDS {
            let spec = UtilitySpec::new(kind, 2).samples(300).seed(seed).streams(2);
            let u = Utility::new(spec, 3).unwrap();
            let a = u.evaluate(&s);
            let b = u.evaluate(&perm);
            if kind.is_monte_carlo() {
                let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
                prop_assert!((a.value - b.value).abs() <= 5.0 * se + 1e-12, "{kind:?}");
            } else {
                prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0), "{kind:?}");
            }
            let c = u.evaluate(&bump);
            prop_assert!(c.value >= a.value - 5.0 * a.std_error.max(c.std_error) - 1e-12, "{kind:?}");
            prop_assert_eq!(a.value.to_bits(), u.evaluate(&s).value.to_bits());
        }
    }

    #[test]
    fn bound_ordering(seed in any::<u64>(), n_rx in 1usize..4) {
        let mut rng = instances::rng(seed);
        let s: Vec<f64> = (0..2).map(|_| rng.random_range(0.01..5.0)).collect();
        let eval = |kind| trainprecode::utility::evaluate(&UtilitySpec::new(kind, n_rx).samples(400).seed(seed), &s).unwrap();
        let mi = eval(UtilityKind::MutualInfo);
        let lower = eval(UtilityKind::MinkowskiLower);
        let up1 = eval(UtilityKind::JensenUpper1);
        let up2 = eval(UtilityKind::JensenUpper2);
        prop_assert!(lower.value <= mi.value + 5.0 * (lower.std_error + mi.std_error));
        prop_assert!(mi.value <= up2.value + 5.0 * mi.std_error);
        prop_assert!(mi.value <= up1.value + 5.0 * mi.std_error);
    }

    #[test]
    fn nu_reciprocal_midpoint_convexity(seed in any::<u64>()) {
        let mut rng = instances::rng(seed);
        let r = vec![2.0 / 3.0, 1.0 / 3.0];
        let cfg = cfg2(rng.random_range(0.1..20.0), &r);
        let e = Direction::normalized(&[rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)]).unwrap();
        let budget = cfg.total_energy();
        let mut draw = || {
            let a: f64 = rng.random_range(0.001..1.0);
            let b: f64 = rng.random_range(0.001..1.0);
            let scale = rng.random_range(0.01..0.999) * budget / (a + b);
            vec![a * scale, b * scale]
        };
        let (p1, p2) = (draw(), draw());
        let mid: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
        let f = |p: &[f64]| nu_reciprocal(p, &e, &cfg);
        let lhs = f(&mid);
        let rhs = 0.5 * (f(&p1) + f(&p2));
        prop_assert!(lhs <= rhs + 1e-10 * rhs.abs().max(1.0), "{lhs} > {rhs}");
        let alpha: f64 = rng.random_range(0.0..1.0);
        let mix: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let nv = |p: &[f64]| nu(p, &e, &cfg).unwrap();
        prop_assert!(nv(&mix) >= nv(&p1).min(nv(&p2)) - 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 60, ..ProptestConfig::default() })]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), kind_ix in 0usize..13) {
        let kind = ALL_KINDS[kind_ix];
        let mut rng = instances::rng(seed);
        let s: Vec<f64> = (0..2).map(|_| rng.random_range(0.1..3.0)).collect();
        let spec = UtilitySpec::new(kind, 2).samples(500).seed(seed).streams(2);
        let u = Utility::new(spec, 2).unwrap();
        let g = u.gradient(&s).unwrap();
        let fd = trainprecode::oracle::finite_diff_gradient_frozen(&u, &s, 1e-5).unwrap();
        let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-4 * scale.max(1e-12), "{kind:?}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn simplex_region_is_sound(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, n);
        let p = GramMatrix::pilot({ let k = rng.random_range(1..=n); let t = 3.0; instances::psd_with_trace(&mut rng, n, k, t) }).unwrap();
        let mu_q = rng.random_range(0.2..5.0);
        let region = simplex_region(&p, &r, mu_q).unwrap();
        for _ in 0..50 {
            let q = GramMatrix::transmit({ let k = rng.random_range(1..=n); let t = rng.random_range(0.0..mu_q); instances::psd_with_trace(&mut rng, n, k, t) }).unwrap();
            let s = effective_snr(&p, &q, &r).profile;
            prop_assert!(region.membership_residual(&s) <= 1e-8);
        }
        for v in &region.vertices[1..] {
            let q = region.recover_q(&v[..region.r_p]).unwrap();
            prop_assert!(q.trace() <= mu_q * (1.0 + 1e-9));
            let got = effective_snr(&p, &GramMatrix::transmit(q).unwrap(), &r).profile;
            for (a, b) in got.iter().zip(v) {
                prop_assert!((a - b).abs() <= 1e-8 * v[0].max(1.0));
            }
        }
    }

    #[test]
    fn optimal_precoder_stays_in_estimate_range_when_aligned(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = instances::rng(seed);
        let eigs = instances::channel_eigs(&mut rng, n);
        let u_r = instances::unitary(&mut rng, n);
        let r = ChannelCovariance::new(instances::conjugate_diag(&u_r, &eigs)).unwrap();
        let mut pd: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        pd[n - 1] = 0.0;
        let p = GramMatrix::pilot(instances::conjugate_diag(&u_r, &pd)).unwrap();
        let u = Utility::new(UtilitySpec::new(UtilityKind::LogdetShifted { nu: 1.0 }, 1), n).unwrap();
        let sol = optimize_precoder(&p, &r, 2.0, &u).unwrap();
        prop_assert!(sol.region.aligned);
        let pi = range_projector(&eig_hermitian(&estimation_covariances(&p, &r).r_hat));
        let perp = CMat::identity(n, n) - pi;
        let leak = frobenius(&(&perp * sol.q.matrix().matrix() * &perp));
        prop_assert!(leak <= 1e-8 * frobenius(sol.q.matrix().matrix()).max(1e-300));
    }

    #[test]
    fn lf_round_trip_and_segments(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = instances::rng(seed);
        let a = instances::complex_gaussian(&mut rng, n, n);
        let b = instances::psd_with_rank(&mut rng, n, n, 0.1, 1.0);
        let map = LinearFractionalMap::new(a, b).unwrap();
        let x = instances::psd_with_rank(&mut rng, n, n, 0.1, 2.0);
        let y = map.apply(&x).unwrap();
        let back = map.invert(&y, InvertMode::FullColumnRank).unwrap();
        prop_assert!(frobenius(&(back.matrix() - x.matrix())) <= 1e-8 * frobenius(x.matrix()).max(1.0));
        let x2 = instances::psd_with_rank(&mut rng, n, n, 0.1, 2.0);
        let alpha: f64 = rng.random_range(0.0..1.0);
        let mix = HermitianMatrix::symmetrized(&(x.matrix() * C64::new(alpha, 0.0) + x2.matrix() * C64::new(1.0 - alpha, 0.0)));
        let beta = map.segment_beta(&x, &x2, alpha);
        prop_assert!((0.0..=1.0).contains(&beta));
        let y2 = map.apply(&x2).unwrap();
        let lhs = map.apply(&mix).unwrap();
        let rhs = y.matrix() * C64::new(beta, 0.0) + y2.matrix() * C64::new(1.0 - beta, 0.0);
        prop_assert!(frobenius(&(lhs.matrix() - rhs)) <= 1e-10 * frobenius(lhs.matrix()).max(1.0));
    }

    #[test]
    fn estimate_domain_is_convex(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, n);
        let mu_p = rng.random_range(0.5..5.0);
        let dom = EstimateCovDomain::new(r.clone(), mu_p);
        let mut draw = || {
            let p = GramMatrix::pilot({ let k = rng.random_range(1..=n); let t = rng.random_range(0.0..mu_p); instances::psd_with_trace(&mut rng, n, k, t) }).unwrap();
            estimation_covariances(&p, &r).r_hat
        };
        let (x1, x2) = (draw(), draw());
        prop_assert!(dom.contains(&x1) && dom.contains(&x2));
        for alpha in [0.1, 0.5, 0.9] {
            let mix = HermitianMatrix::symmetrized(&(x1.matrix() * C64::new(alpha, 0.0) + x2.matrix() * C64::new(1.0 - alpha, 0.0)));
            prop_assert!(dom.contains(&mix));
        }
    }

    #[test]
    fn quadrature_schemes_agree(s in 1e-4f64..1e3) {
        for kind in [QuadKind::MutualInfo, QuadKind::MmseInner] {
            let a = quadrature_1x1_with(kind, s, QuadScheme::AdaptiveSimpson).unwrap();
            let b = quadrature_1x1_with(kind, s, QuadScheme::ExponentialIntegral).unwrap();
            prop_assert!((a - b).abs() <= 1e-9, "{kind:?} {s}: {a} {b}");
        }
    }

    #[test]
    fn border_is_full_power_and_non_dominated(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = instances::rng(seed);
        let r = instances::channel_eigs(&mut rng, n);
        let cfg = SystemConfig { n_rx: 1, ..cfg2(rng.random_range(0.1..30.0), &r) };
        let boost = sample_border(12, BorderMode::Boost, &cfg).unwrap();
        for ray in &boost {
            let used = ray.p.iter().sum::<f64>() + cfg.data_slots() * ray.q.iter().sum::<f64>();
            prop_assert!((used - cfg.total_energy()).abs() <= 1e-8 * cfg.total_energy());
            let s = snr_profile_vec(&ray.p, &ray.q, &r);
            for (a, b) in s.iter().zip(&ray.s) {
                prop_assert!((a - b).abs() <= 1e-8 * ray.nu.max(1.0));
            }
        }
        for a in &boost {
            for b in &boost {
                prop_assert!(!dominates(&a.s, &b.s, 1e-8));
            }
        }
        let (mu_p, mu_q) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        for ray in sample_border(12, BorderMode::FixedBudgets { mu_p, mu_q }, &cfg).unwrap() {
            prop_assert!((ray.p.iter().sum::<f64>() - mu_p).abs() <= 1e-8 * mu_p);
            prop_assert!((ray.q.iter().sum::<f64>() - mu_q).abs() <= 1e-8 * mu_q);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn pilot_rank_bounded_by_precoder_rank(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, n);
        let q = GramMatrix::transmit({ let k = rng.random_range(1..n); let t = 2.0; instances::psd_with_trace(&mut rng, n, k, t) }).unwrap();
        let u = Utility::new(UtilitySpec::new(UtilityKind::LogdetShifted { nu: 1.0 }, 1), n).unwrap();
        let sol = optimize_pilot(&q, &r, 3.0, &u).unwrap();
        prop_assert!(sol.p.rank() <= q.rank(), "rank P {} > rank Q {}", sol.p.rank(), q.rank());
        // no feasible direction improves the optimum
        for _ in 0..50 {
            let other = { let k = rng.random_range(1..=n); let t = 3.0; instances::psd_with_trace(&mut rng, n, k, t) };
            let t: f64 = rng.random_range(0.0..0.2);
            let mix = HermitianMatrix::symmetrized(&(sol.p.matrix().matrix() * C64::new(1.0 - t, 0.0) + other.matrix() * C64::new(t, 0.0)));
            let v = u.evaluate(&effective_snr(&GramMatrix::pilot(mix).unwrap(), &q, &r).profile).value;
            prop_assert!(v <= sol.value.value + 1e-6, "{v} > {}", sol.value.value);
        }
        prop_assert!(psd_eigen(sol.p.matrix()).is_ok());
    }

    #[test]
    fn joint_ascent_is_monotone_feasible_and_rank_matched(seed in any::<u64>(), n in 1usize..4, fixed in any::<bool>()) {
        let mut rng = instances::rng(seed);
        let r = instances::channel_eigs(&mut rng, n);
        let cfg = SystemConfig { n_rx: 1, ..cfg2(rng.random_range(0.1..30.0), &r) };
        let spec = UtilitySpec::new(UtilityKind::LogdetShifted { nu: 1.0 }, 1);
        let (mu_p, mu_q) = (rng.random_range(0.5..10.0), rng.random_range(0.5..10.0));
        let res = if fixed {
            run_fixed_budgets(&cfg, spec, mu_p, mu_q, JointOptions::default()).unwrap()
        } else {
            run_boost(&cfg, spec, JointOptions::default()).unwrap()
        };
        for w in res.trace.iterations.windows(2) {
            prop_assert!(w[1].utility >= w[0].utility - 1e-9);
        }
        for it in &res.trace.iterations {
            if fixed {
                prop_assert!(it.p.iter().sum::<f64>() <= mu_p * (1.0 + 1e-8));
                prop_assert!(it.q.iter().sum::<f64>() <= mu_q * (1.0 + 1e-8));
            } else {
                let used = it.p.iter().sum::<f64>() + cfg.data_slots() * it.q.iter().sum::<f64>();
                prop_assert!(used <= cfg.total_energy() * (1.0 + 1e-8));
            }
        }
        let (np, nq) = res.nonzero_counts();
        prop_assert_eq!(np, nq);
    }
}

/// The range inclusion of the optimal precoder needs aligned estimates: a
/// rank-deficient pilot Gram that does not commute with R lets the optimum
/// leak outside range(R̂), and the leaked precoder still achieves its profile.
#[test]
fn misaligned_rank_deficient_pilots_can_leak() {
    let mut leaked = false;
    for seed in 0..20u64 {
        let mut rng = instances::rng(seed);
        let r = channel(&mut rng, 3);
        let p = GramMatrix::pilot(instances::psd_with_trace(&mut rng, 3, 1, 2.0)).unwrap();
        let u = Utility::new(UtilitySpec::new(UtilityKind::Trace, 1), 3).unwrap();
        let sol = optimize_precoder(&p, &r, 2.0, &u).unwrap();
        let got = effective_snr(&p, &sol.q, &r).profile;
        assert!((got[0] - sol.profile[0]).abs() <= 1e-8 * sol.profile[0]);
        let pi = range_projector(&eig_hermitian(&estimation_covariances(&p, &r).r_hat));
        let perp = CMat::identity(3, 3) - pi;
        let leak = frobenius(&(&perp * sol.q.matrix().matrix() * &perp));
        if !sol.region.aligned && leak > 1e-6 * frobenius(sol.q.matrix().matrix()) {
            leaked = true;
        }
    }
    assert!(leaked);
}

/// Refining a grid never moves its optimum by more than the utility spread
/// within one coarse cell of the coarse optimum.
#[test]
fn grid_refinement_is_lipschitz_sane() {
    use trainprecode::oracle::{grid_search_joint, GridMode, GridSpec};
    for seed in 0..10u64 {
        let mut rng = instances::rng(seed);
        let r = instances::channel_eigs(&mut rng, 2);
        let cfg = cfg2(rng.random_range(0.5..10.0), &r);
        let (mu_p, mu_q) = (rng.random_range(1.0..10.0), rng.random_range(1.0..10.0));
        let spec = UtilitySpec::new(UtilityKind::LogdetShifted { nu: 1.0 }, 2);
        let mode = GridMode::FixedBudgets { mu_p, mu_q };
        let coarse = grid_search_joint(&GridSpec::new(cfg.clone(), mode, 11), spec).unwrap();
        let fine = grid_search_joint(&GridSpec::new(cfg.clone(), mode, 21), spec).unwrap();
        assert!(fine.utility >= coarse.utility - 1e-12);
        // spread over the coarse cell around the coarse optimum
        let u = Utility::new(spec, 2).unwrap();
        let (y0, z0) = (coarse.p[0] / mu_p, coarse.q[0] / mu_q);
        let mut spread: f64 = 0.0;
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                let (y, z) = (y0 + 0.05 * i as f64, z0 + 0.05 * j as f64);
                if !(0.0..=1.0).contains(&y) || !(0.0..=1.0).contains(&z) {
                    continue;
                }
                let p = [y * mu_p, (1.0 - y) * mu_p];
                let q = [z * mu_q, (1.0 - z) * mu_q];
                let v = u.evaluate_modes(&snr_profile_vec(&p, &q, &r)).value;
                spread = spread.max((v - coarse.utility).abs());
            }
        }
        assert!(fine.utility - coarse.utility <= spread + 1e-12, "seed {seed}");
    }
}
