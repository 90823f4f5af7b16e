//! Synthetic exchangeable tasks.
//!
//! The generator draws label prototypes in a latent space, then i.i.d.
//! examples around them, so calibration and test examples are exchangeable
//! by construction and the coverage guarantee's hypothesis holds. Scores
//! come from a cosine-distance provider with a per-reference quality
//! multiplier:
//!
//! ```text
//! score((x_r, y_r), (x_t, y_t)) = quality_r * (1 - cos(phi(x_t, y_t), phi(x_r, y_r)))
//! ```
//!
//! where `phi(x, y)` concatenates the latent features with a fixed
//! orthogonal (one-hot) label embedding. Quality multipliers are
//! nonnegative and the cosine distance is nonnegative up to rounding, so
//! scores need no shift. The multiplier is drawn per example from
//! `[1 - rho, 1 + rho]`: `rho = 0` gives homogeneous references while
//! larger values leave only a subset of references informative, which is
//! the regime where aggregation pays off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::{materialize, MaterializeError, ScoreProvider};
use crate::scos::CalibrationSweep;
use crate::tensor::{ScoreTensor, TensorError};

/// Errors from synthetic generation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("task spec field {field}: {message}")]
    Spec {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Materialize(#[from] MaterializeError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

fn default_true() -> bool {
    true
}

/// Parameters of a synthetic task distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    /// Calibration-set size.
    pub n: usize,
    /// Number of test inputs per task.
    #[serde(default = "default_test_count")]
    pub test_count: usize,
    /// Label-space size.
    pub label_count: usize,
    /// Latent feature dimension.
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    /// Noise scale around label prototypes.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Reference-quality heterogeneity in `[0, 1]`.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Generation seed.
    #[serde(default)]
    pub seed: u64,
    /// Whether to fill the full-conformal block.
    #[serde(default = "default_true")]
    pub include_full: bool,
}

fn default_test_count() -> usize {
    1
}

fn default_latent_dim() -> usize {
    16
}

fn default_sigma() -> f64 {
    0.3
}

fn default_rho() -> f64 {
    0.5
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        Self {
            n: 30,
            test_count: 1,
            label_count: 8,
            latent_dim: 16,
            sigma: default_sigma(),
            rho: default_rho(),
            seed: 0,
            include_full: true,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::Spec {
                field: "n",
                message: format!("need at least 2 calibration examples, got {}", self.n),
            });
        }
        if self.label_count == 0 {
            return Err(SimError::Spec {
                field: "label_count",
                message: "label space must be nonempty".into(),
            });
        }
        if self.latent_dim == 0 {
            return Err(SimError::Spec {
                field: "latent_dim",
                message: "latent dimension must be positive".into(),
            });
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(SimError::Spec {
                field: "sigma",
                message: format!("noise scale must be positive, got {}", self.sigma),
            });
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(SimError::Spec {
                field: "rho",
                message: format!("heterogeneity must lie in [0, 1], got {}", self.rho),
            });
        }
        Ok(())
    }

    /// This spec with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// A synthetic example: latent features plus the quality multiplier of the
/// predictor it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SynExample {
    pub features: Vec<f64>,
    pub quality: f64,
}

/// Quality-scaled cosine-distance scoring over `phi(x, y) = [x ; s * e_y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineProvider {
    label_count: usize,
    embed_scale: f64,
}

impl CosineProvider {
    pub fn new(label_count: usize, latent_dim: usize) -> Self {
        // Balance the label embedding against typical feature norms.
        Self {
            label_count,
            embed_scale: (latent_dim as f64).sqrt(),
        }
    }
}

impl ScoreProvider for CosineProvider {
    type Input = SynExample;

    fn label_count(&self) -> usize {
        self.label_count
    }

    fn score(&self, reference: (&SynExample, usize), target: &SynExample, candidate: usize) -> f64 {
        let (reference, reference_label) = reference;
        let scale_sq = self.embed_scale * self.embed_scale;
        let mut dot = 0.0;
        for (a, b) in reference.features.iter().zip(&target.features) {
            dot += a * b;
        }
        if reference_label == candidate {
            dot += scale_sq;
        }
        let norm_r = (reference.features.iter().map(|v| v * v).sum::<f64>() + scale_sq).sqrt();
        let norm_t = (target.features.iter().map(|v| v * v).sum::<f64>() + scale_sq).sqrt();
        let cosine = dot / (norm_r * norm_t);
        reference.quality * (1.0 - cosine)
    }
}

/// A generated task: the score tensor plus everything needed to re-derive
/// or extend it (the drawn examples and the provider).
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub tensor: ScoreTensor,
    /// Per-label calibration-input scores; present when requested.
    pub sweep: Option<CalibrationSweep>,
    pub calibration: Vec<(SynExample, usize)>,
    pub test_examples: Vec<(SynExample, usize)>,
    pub provider: CosineProvider,
}

/// Generate a task. Draw order is fixed so equal specs give bit-identical
/// tensors: label prototypes (label-major), then examples in dataset order
/// (calibration first, then test), each drawing its label, its
/// `latent_dim` feature coordinates, and its quality multiplier, all from
/// one ChaCha8 stream seeded with `spec.seed`.
pub fn generate(spec: &SyntheticTaskSpec, with_sweep: bool) -> Result<SyntheticTask, SimError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let prototypes: Vec<Vec<f64>> = (0..spec.label_count)
        .map(|_| {
            (0..spec.latent_dim)
                .map(|_| rng.sample(StandardNormal))
                .collect()
        })
        .collect();

    let draw_example = |rng: &mut ChaCha8Rng| {
        let label = rng.random_range(0..spec.label_count);
        let features: Vec<f64> = prototypes[label]
            .iter()
            .map(|&c| c + spec.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let quality = rng.random_range((1.0 - spec.rho)..=(1.0 + spec.rho));
        (SynExample { features, quality }, label)
    };

    let calibration: Vec<(SynExample, usize)> =
        (0..spec.n).map(|_| draw_example(&mut rng)).collect();
    let test_examples: Vec<(SynExample, usize)> = (0..spec.test_count)
        .map(|_| draw_example(&mut rng))
        .collect();

    let provider = CosineProvider::new(spec.label_count, spec.latent_dim);
    let test_inputs: Vec<SynExample> = test_examples
        .iter()
        .map(|(example, _)| example.clone())
        .collect();
    let tensor = materialize(&provider, &calibration, &test_inputs, spec.include_full)?;
    let truth: Vec<usize> = test_examples.iter().map(|(_, label)| *label).collect();
    let tensor = tensor.with_truth(truth)?;

    let sweep = with_sweep.then(|| CalibrationSweep::materialize(&provider, &calibration));
    Ok(SyntheticTask {
        tensor,
        sweep,
        calibration,
        test_examples,
        provider,
    })
}

/// Generate just the score tensor (with full and truth blocks).
pub fn generate_task(spec: &SyntheticTaskSpec) -> Result<ScoreTensor, SimError> {
    Ok(generate(spec, false)?.tensor)
}
