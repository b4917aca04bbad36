//! Alternating joint optimization with pooled energy, checked against the
//! grid oracle.
use trainprecode::joint::{run_boost, JointOptions};
use trainprecode::oracle::{grid_search_joint, GridMode, GridSpec};
use trainprecode::{SystemConfig, UtilityKind, UtilitySpec};

fn main() {
    let cfg = SystemConfig {
        n_tx: 2,
        n_rx: 2,
        coherence_time: 10,
        training_duration: 2,
        power: 10.0,
        channel_eigs: vec![2.0 / 3.0, 1.0 / 3.0],
    };
    let spec = UtilitySpec::new(UtilityKind::MutualInfo, 2).samples(2000).seed(7);
    let res = run_boost(&cfg, spec, JointOptions::default()).unwrap();
    for (k, it) in res.trace.iterations.iter().enumerate() {
        println!("cycle {k}: I = {:.9} nats, p = {:.4?}, q = {:.4?}", it.utility, it.p, it.q);
    }
    println!("converged {}, fresh-sample value {:.6}", res.trace.converged, res.fresh_utility);

    let grid = GridSpec::new(cfg, GridMode::Boost, 20).refined(3);
    let opt = grid_search_joint(&grid, spec).unwrap();
    println!("grid oracle: {:.9} nats at p = {:.4?}, q = {:.4?}", opt.utility, opt.p, opt.q);
}
