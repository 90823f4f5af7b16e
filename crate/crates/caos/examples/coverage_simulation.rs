//! Monte Carlo validation of the marginal coverage guarantee: over
//! exchangeable synthetic tasks, empirical coverage stays at or above
//! `1 - alpha` for the aggregated method, its full-conformal variant, and
//! the fixed-reference split baseline.
//!
//! Run with: `cargo run --release --example coverage_simulation`

use caos::config::Method;
use caos::sim::{coverage_sim, SyntheticTaskSpec};

fn main() {
    let spec = SyntheticTaskSpec {
        n: 30,
        test_count: 1,
        label_count: 8,
        seed: 1,
        ..SyntheticTaskSpec::default()
    };
    let trials = 500;
    let methods = [Method::Caos, Method::FullCaos, Method::ScosFixed];

    println!(
        "{trials} trials per level, n = {}, L = {}",
        spec.n, spec.label_count
    );
    for alpha in [0.05, 0.1, 0.2] {
        // A 7/23 split keeps the baseline's calibration side large enough
        // for its corrected quantile not to saturate at alpha = 0.05.
        let summaries = coverage_sim(&spec, alpha, 3, trials, &methods, 0.25).unwrap();
        for s in summaries {
            println!(
                "alpha {:4}: {:12} coverage {:.3} +- {:.3} (target >= {:.2}), mean size {:5.2} +- {:.2}",
                alpha,
                s.method.name(),
                s.coverage,
                s.coverage_sem,
                1.0 - alpha,
                s.mean_size,
                s.size_sem,
            );
        }
    }
}
