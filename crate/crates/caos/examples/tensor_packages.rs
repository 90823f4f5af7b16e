//! Score-tensor packages on disk: save, reload bit-exactly, and inspect.
//! The package layout (manifest.json plus CSV blocks) is the interchange
//! format between score producers (models) and this library.
//!
//! Run with: `cargo run --example tensor_packages`

use caos::sim::{generate_task, SyntheticTaskSpec};
use caos::tensor::ScoreTensor;

fn main() {
    let dir = std::env::temp_dir().join("caos-tensor-package-demo");
    let tensor = generate_task(&SyntheticTaskSpec {
        n: 8,
        test_count: 2,
        label_count: 3,
        seed: 99,
        ..SyntheticTaskSpec::default()
    })
    .expect("valid spec");

    tensor.save(&dir).expect("writable directory");
    println!("wrote package to {}", dir.display());
    for entry in std::fs::read_dir(&dir).unwrap() {
        let entry = entry.unwrap();
        println!(
            "  {} ({} bytes)",
            entry.file_name().to_string_lossy(),
            entry.metadata().unwrap().len()
        );
    }

    let loaded = ScoreTensor::load(&dir).expect("valid package");
    assert_eq!(tensor, loaded);
    // Full precision survives the text round trip, bit for bit.
    for i in 0..tensor.n() {
        for j in 0..tensor.n() {
            assert_eq!(tensor.p(i, j).to_bits(), loaded.p(i, j).to_bits());
        }
    }
    println!(
        "reloaded bit-exactly: n={} T={} L={} full={} truth={}",
        loaded.n(),
        loaded.test_count(),
        loaded.label_count(),
        loaded.has_full(),
        loaded.truth().is_some(),
    );
}
