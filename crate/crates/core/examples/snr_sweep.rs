//! Joint versus precoder-only versus unoptimized designs across SNR, as
//! written by the `sweep` command.
use trainprecode::experiment::{sweep_csv, sweep_rows, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig::from_json(
        r#"{
            "system": {"n_tx": 2, "n_rx": 2, "coherence_time": 10, "training_duration": 2,
                       "power": 1.0, "channel_eigs": [0.6666666666666666, 0.3333333333333333]},
            "utility": {"kind": "mutual_info", "mc_samples": 2000},
            "mode": "full_fledged",
            "sweep": [-10, 0, 10, 20]
        }"#,
    )
    .unwrap();
    print!("{}", sweep_csv(&sweep_rows(&cfg).unwrap()));
}
