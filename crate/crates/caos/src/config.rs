//! Experiment configuration and the method vocabulary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A prediction-set construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Leave-one-out calibrated aggregation over all references.
    Caos,
    /// Full-conformal variant with one threshold per candidate label.
    FullCaos,
    /// Split conformal, reported on average over one-shot predictors.
    Scos,
    /// Split conformal for a single fixed reference (the first one).
    ScosFixed,
    /// Split conformal with the reference selected for smallest average
    /// set size on the calibration data. No coverage guarantee.
    ScosBest,
    /// Split conformal picking, per test point, the smallest single-source
    /// set containing the true label. Hindsight baseline.
    ScosOracle,
    /// Aggregation calibrated on the calibration split with the reference
    /// split as pool.
    SplitCaosRefCal,
    /// Aggregation calibrated on the calibration split, full dataset as pool.
    SplitCaosCal,
    /// Aggregation calibrated on the full dataset, reference split as pool.
    SplitCaosRef,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::Caos,
        Method::FullCaos,
        Method::Scos,
        Method::ScosFixed,
        Method::ScosBest,
        Method::ScosOracle,
        Method::SplitCaosRefCal,
        Method::SplitCaosCal,
        Method::SplitCaosRef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Caos => "caos",
            Method::FullCaos => "full-caos",
            Method::Scos => "scos",
            Method::ScosFixed => "scos-fixed",
            Method::ScosBest => "scos-best",
            Method::ScosOracle => "scos-oracle",
            Method::SplitCaosRefCal => "split-caos-ref-cal",
            Method::SplitCaosCal => "split-caos-cal",
            Method::SplitCaosRef => "split-caos-ref",
        }
    }

    /// Standing caveats attached to every report row for this method.
    pub fn flags(self) -> &'static [&'static str] {
        match self {
            Method::ScosBest => &["no-coverage-guarantee"],
            Method::ScosOracle => &["hindsight"],
            _ => &[],
        }
    }

    /// Whether the method needs the full-conformal score block.
    pub fn needs_full_block(self) -> bool {
        matches!(self, Method::FullCaos)
    }

    /// Whether the method needs a reference/calibration split.
    pub fn needs_split(self) -> bool {
        matches!(
            self,
            Method::Scos
                | Method::ScosFixed
                | Method::ScosBest
                | Method::ScosOracle
                | Method::SplitCaosRefCal
                | Method::SplitCaosCal
                | Method::SplitCaosRef
        )
    }

    /// Whether the method needs per-label scores on calibration inputs
    /// (available for synthetic tasks only).
    pub fn needs_calibration_sweep(self) -> bool {
        matches!(self, Method::ScosBest)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| ConfigError::Field {
                field: "methods",
                message: format!(
                    "unknown method {s:?}; expected one of: {}",
                    Method::ALL.map(Method::name).join(", ")
                ),
            })
    }
}

impl TryFrom<String> for Method {
    type Error = ConfigError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Method> for String {
    fn from(method: Method) -> Self {
        method.name().to_string()
    }
}

/// Configuration validation failure, naming the offending field.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config field {field}: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
}

fn default_alphas() -> Vec<f64> {
    vec![0.1]
}

fn default_k() -> usize {
    3
}

fn default_ref_fraction() -> f64 {
    0.5
}

fn default_trials() -> usize {
    1000
}

fn default_methods() -> Vec<Method> {
    vec![Method::Caos, Method::Scos]
}

/// Everything an experiment run is parameterized by.
///
/// The same structure is accepted as a flat JSON config file; command-line
/// flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Target miscoverage levels; one report row per level.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Aggregation size: how many of the smallest scores are summed.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Master seed for synthetic generation and trial derivation.
    #[serde(default)]
    pub seed: u64,
    /// Methods to evaluate.
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Fraction of the dataset assigned to the reference split; the rest
    /// calibrates. Splits are deterministic: references first.
    #[serde(default = "default_ref_fraction")]
    pub ref_fraction: f64,
    /// Number of Monte Carlo trials for simulation commands.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Worker threads; `None` uses every available core.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alphas: default_alphas(),
            k: default_k(),
            seed: 0,
            methods: default_methods(),
            ref_fraction: default_ref_fraction(),
            trials: default_trials(),
            workers: None,
        }
    }
}

impl ExperimentConfig {
    /// Field-level validation for everything checkable without the data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.alphas.is_empty() {
            return Err(ConfigError::Field {
                field: "alphas",
                message: "at least one miscoverage level is required".into(),
            });
        }
        for &alpha in &self.alphas {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(ConfigError::Field {
                    field: "alphas",
                    message: format!("alpha must lie in (0, 1), got {alpha}"),
                });
            }
        }
        if self.k == 0 {
            return Err(ConfigError::Field {
                field: "k",
                message: "aggregation size must be at least 1".into(),
            });
        }
        if !(self.ref_fraction > 0.0 && self.ref_fraction < 1.0) {
            return Err(ConfigError::Field {
                field: "ref_fraction",
                message: format!(
                    "must lie strictly between 0 and 1, got {}",
                    self.ref_fraction
                ),
            });
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Field {
                field: "methods",
                message: "at least one method is required".into(),
            });
        }
        if self.trials == 0 {
            return Err(ConfigError::Field {
                field: "trials",
                message: "at least one trial is required".into(),
            });
        }
        if self.workers == Some(0) {
            return Err(ConfigError::Field {
                field: "workers",
                message: "worker count must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.name().parse::<Method>().unwrap(), method);
        }
        assert!("bogus".parse::<Method>().is_err());
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_names_the_field() {
        let config = ExperimentConfig {
            alphas: vec![1.5],
            ..Default::default()
        };
        let err = config.validate().unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Field {
                field: "alphas",
                ..
            }
        ));
    }

    #[test]
    fn config_file_round_trip() {
        let config = ExperimentConfig {
            alphas: vec![0.05, 0.1],
            k: 3,
            seed: 7,
            methods: vec![Method::Caos, Method::FullCaos],
            ref_fraction: 0.5,
            trials: 50,
            workers: Some(2),
        };
        let text = serde_json::to_string(&config).unwrap();
        let parsed: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.methods, config.methods);
        assert_eq!(parsed.alphas, config.alphas);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>("{\"bogus\": 1}").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
