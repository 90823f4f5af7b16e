//! The core workflow: calibrate on a pool of one-shot scores and emit a
//! prediction set for each test input.
//!
//! Run with: `cargo run --example calibrated_prediction`

use caos::caos::{calibrate, predict};
use caos::sim::{generate_task, SyntheticTaskSpec};

fn main() {
    // A synthetic task stands in for precomputed model scores here; see the
    // `custom_provider` example for plugging in your own model.
    let tensor = generate_task(&SyntheticTaskSpec {
        n: 30,
        test_count: 5,
        label_count: 8,
        seed: 42,
        ..SyntheticTaskSpec::default()
    })
    .expect("valid spec");

    let alpha = 0.1;
    let k = 3;
    let calibration = calibrate(&tensor, alpha, k).expect("calibration");
    println!(
        "calibrated on n={} examples: quantile level {:.4}, threshold {:.4}",
        calibration.n, calibration.level, calibration.threshold
    );

    let truth = tensor.truth().expect("synthetic tasks carry truth");
    for (t, &true_label) in truth.iter().enumerate() {
        let set = predict(&tensor, t, &calibration).expect("prediction");
        println!(
            "test {t}: set {:?} (size {}), true label {true_label} {}",
            set.members(),
            set.size(),
            if set.contains(true_label) {
                "covered"
            } else {
                "MISSED"
            },
        );
    }
}
