//! Sampling the Pareto border of SNR profiles, pooled versus separate
//! energy budgets.
use trainprecode::pareto::{sample_border, BorderMode};
use trainprecode::SystemConfig;

fn main() {
    let cfg = SystemConfig {
        n_tx: 2,
        n_rx: 2,
        coherence_time: 10,
        training_duration: 2,
        power: 10.0,
        channel_eigs: vec![2.0 / 3.0, 1.0 / 3.0],
    };
    let boost = sample_border(9, BorderMode::Boost, &cfg).unwrap();
    // same total energy Tμ split as T_τμ for pilots and μ per data slot
    let fixed = sample_border(9, BorderMode::FixedBudgets { mu_p: 20.0, mu_q: 10.0 }, &cfg).unwrap();
    println!("{:>8} {:>8} {:>10} {:>10}", "e_1", "e_2", "ν boost", "ν fixed");
    for (b, f) in boost.iter().zip(&fixed) {
        let e = b.e.as_slice();
        println!("{:>8.4} {:>8.4} {:>10.5} {:>10.5}", e[0], e[1], b.nu, f.nu);
    }
}
