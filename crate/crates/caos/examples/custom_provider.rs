//! Plugging in your own model: implement `ScoreProvider` over whatever an
//! example looks like for you, materialize the score tensor once, and run
//! any method on it. The provider is the only place model knowledge lives.
//!
//! Run with: `cargo run --example custom_provider`

use caos::caos::{calibrate, predict};
use caos::provider::{materialize, ScoreProvider};

/// Toy embedding model: each label has a centroid per reference example,
/// and the score is the squared distance between the target embedding and
/// the reference embedding, inflated when the candidate label disagrees
/// with the reference label.
struct EmbeddingScores {
    labels: usize,
}

impl ScoreProvider for EmbeddingScores {
    type Input = Vec<f64>;

    fn label_count(&self) -> usize {
        self.labels
    }

    fn score(&self, reference: (&Vec<f64>, usize), target: &Vec<f64>, candidate: usize) -> f64 {
        let (embedding, label) = reference;
        let distance: f64 = embedding
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if label == candidate {
            distance
        } else {
            distance + 1.0
        }
    }
}

fn main() {
    let provider = EmbeddingScores { labels: 3 };
    let embed = |label: usize, jitter: f64| -> Vec<f64> {
        let center = label as f64;
        vec![center + jitter, center - jitter / 2.0]
    };
    // Labeled pool: embeddings cluster by label around 0.0, 1.0, 2.0 with
    // some within-cluster spread.
    let calib: Vec<(Vec<f64>, usize)> = (0..12)
        .map(|i| {
            let label = i % 3;
            let jitter = 0.1 * (i % 5) as f64 / 5.0;
            (embed(label, jitter), label)
        })
        .collect();
    // Test inputs drawn from the same cluster geometry as the pool.
    let test_inputs = vec![embed(0, 0.03), embed(2, 0.05)];

    let tensor = materialize(&provider, &calib, &test_inputs, false).expect("finite scores");
    let calibration = calibrate(&tensor, 0.1, 2).expect("calibration");
    for t in 0..tensor.test_count() {
        let set = predict(&tensor, t, &calibration).expect("prediction");
        println!(
            "test {t}: members {:?} with per-label scores {:?}",
            set.members(),
            set.scores()
                .iter()
                .map(|s| (s * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>(),
        );
    }
}
