//! The full-conformal construction and its relationship to the
//! leave-one-out method: identical test scores, per-label thresholds that
//! never exceed the single threshold, and sets contained in the
//! leave-one-out sets.
//!
//! Run with: `cargo run --example full_conformal_check`

use caos::caos::{calibrate, predict};
use caos::full;
use caos::sim::{generate_task, SyntheticTaskSpec};

fn main() {
    let tensor = generate_task(&SyntheticTaskSpec {
        n: 20,
        test_count: 3,
        label_count: 5,
        seed: 23,
        include_full: true, // the hypothetical-predictor block
        ..SyntheticTaskSpec::default()
    })
    .expect("valid spec");
    let alpha = 0.1;
    let k = 3;

    let calibration = calibrate(&tensor, alpha, k).unwrap();
    for t in 0..tensor.test_count() {
        let loo_set = predict(&tensor, t, &calibration).unwrap();
        let full_set = full::predict(&tensor, t, alpha, k).unwrap();

        assert_eq!(loo_set.scores(), full_set.test_scores());
        assert!(full_set
            .members()
            .iter()
            .all(|&label| loo_set.contains(label)));
        let max_label_threshold = full_set
            .thresholds()
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        assert!(max_label_threshold <= calibration.threshold);

        println!(
            "test {t}: full {:?} inside leave-one-out {:?}; thresholds <= {:.4}",
            full_set.members(),
            loo_set.members(),
            calibration.threshold,
        );
    }
    println!("set inclusion and threshold dominance verified on every test input");
}
