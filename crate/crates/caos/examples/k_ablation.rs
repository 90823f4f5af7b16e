//! Sensitivity to the aggregation size k: one simulation per k with
//! everything else fixed, emitted as the standard long-format summary
//! table (the same thing `caos ablate-k` prints).
//!
//! Run with: `cargo run --release --example k_ablation`

use caos::config::{ExperimentConfig, Method};
use caos::runner::ablate_k;
use caos::sim::SyntheticTaskSpec;

fn main() {
    let spec = SyntheticTaskSpec {
        n: 30,
        test_count: 1,
        label_count: 8,
        seed: 5,
        include_full: false,
        ..SyntheticTaskSpec::default()
    };
    let config = ExperimentConfig {
        alphas: vec![0.1],
        seed: 5,
        methods: vec![Method::Caos],
        trials: 300,
        ..ExperimentConfig::default()
    };
    let k_values: Vec<usize> = (1..=10).collect();
    let report = ablate_k(&config, &spec, &k_values).expect("simulation");
    print!("{}", report.csv_string());
}
