//! The split-conformal baselines on one task: per-reference sets, the
//! average over references, data-driven selection of the best reference,
//! and the hindsight oracle — with the aggregated method for contrast.
//!
//! Run with: `cargo run --example split_conformal_baselines`

use caos::caos::{calibrate, predict};
use caos::scos;
use caos::sim::{generate, SyntheticTaskSpec};
use caos::SplitSpec;

fn main() {
    let task = generate(
        &SyntheticTaskSpec {
            n: 30,
            test_count: 6,
            label_count: 6,
            sigma: 0.15,
            rho: 0.3,
            seed: 11,
            ..SyntheticTaskSpec::default()
        },
        true, // also materialize per-label calibration scores for best-select
    )
    .expect("valid spec");
    let tensor = &task.tensor;
    let truth = tensor.truth().unwrap();
    let alpha = 0.2;
    let split = SplitSpec::halves(tensor.n()).expect("n >= 2");

    // One predictor per reference example, each with its own threshold.
    let first_ref = split.reference()[0];
    let calibration = scos::calibrate(tensor, &split, first_ref, alpha).unwrap();
    let set = scos::predict(tensor, 0, first_ref, &calibration).unwrap();
    println!(
        "reference {first_ref}: threshold {:.4}, set {:?} on test 0",
        calibration.threshold,
        set.members()
    );

    // Averaged over all references (the honest baseline).
    let report = scos::average_report(tensor, &split, alpha).unwrap();
    println!(
        "average over {} references: coverage {:.3}, mean size {:.2}",
        split.reference().len(),
        report.overall_coverage,
        report.overall_size
    );

    // Selecting the reference with the smallest in-sample sets voids the
    // guarantee; reports flag it accordingly.
    let sweep = task.sweep.as_ref().unwrap();
    let best = scos::best_select(tensor, &split, alpha, sweep).unwrap();
    println!("best reference by calibration-set size: {best}");

    // The oracle needs the true label, so it is a reference only.
    for (t, &true_label) in truth.iter().enumerate().take(3) {
        let pick = scos::oracle_predict(tensor, &split, alpha, t, true_label).unwrap();
        println!(
            "oracle on test {t}: reference {}, set {:?}{}",
            pick.ref_id,
            pick.set.members(),
            if pick.fallback { " (fallback)" } else { "" }
        );
    }

    // The same data without splitting: aggregation over all 30 references,
    // calibrated leave-one-out.
    let aggregated = calibrate(tensor, alpha, 3).unwrap();
    let sizes: Vec<usize> = (0..tensor.test_count())
        .map(|t| predict(tensor, t, &aggregated).unwrap().size())
        .collect();
    println!(
        "aggregated method on the same task: sizes {sizes:?} (mean {:.2})",
        sizes.iter().sum::<usize>() as f64 / sizes.len() as f64
    );
}
