//! Training-duration search with the rate charged for training time, and
//! the separate-budget variant.
use trainprecode::joint::{run_fixed_budgets, run_full_fledged, JointOptions};
use trainprecode::{SystemConfig, UtilityKind, UtilitySpec};

fn main() {
    let cfg = SystemConfig {
        n_tx: 3,
        n_rx: 2,
        coherence_time: 12,
        training_duration: 1,
        power: 2.0,
        channel_eigs: vec![0.6, 0.3, 0.1],
    };
    let spec = UtilitySpec::new(UtilityKind::MutualInfo, 2).samples(2000);
    let res = run_full_fledged(&cfg, spec, JointOptions::default()).unwrap();
    for (t, v) in &res.per_training {
        println!("T_τ = {t}: weighted rate {:.6} nats", v);
    }
    println!("best T_τ = {}, p★ = {:.4?}, q★ = {:.4?}, streams = {}", res.t_tau_star, res.p_star, res.q_star, res.rank_star);

    let fixed = run_fixed_budgets(&cfg.with_training(3), spec, 6.0, 2.0, JointOptions::default()).unwrap();
    println!("separate budgets: {:.6} nats, p★ = {:.4?}, q★ = {:.4?}", fixed.utility, fixed.p_star, fixed.q_star);
}
