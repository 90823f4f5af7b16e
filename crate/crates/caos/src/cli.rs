//! Command-line interface.
//!
//! Subcommands: `run` (evaluate methods on a tensor or one synthetic task),
//! `sim` (Monte Carlo coverage), `ablate-k`, `ablate-splits`, `validate`
//! (tensor lint) and `export-synthetic`. Exit codes: 0 success, 2
//! configuration error, 3 data or validation error, 4 internal invariant
//! violation.
//!
//! `CAOS_WORKERS` and `CAOS_OUT` override the `--workers` flag and the
//! output directory; nothing else is read from the environment.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig};
use crate::eval::{EvalReport, ReportFormat};
use crate::runner::{self, DataSource, RunError};
use crate::sim::{self, SimError, SyntheticTaskSpec};
use crate::tensor::ScoreTensor;

#[derive(Debug, Parser)]
#[command(
    name = "caos",
    version,
    about = "Calibrated prediction sets from pools of one-shot nonconformity scores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct CommonArgs {
    /// Flat JSON config file mirroring the experiment-config fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Target miscoverage level (repeatable).
    #[arg(long = "alpha", value_name = "LEVEL")]
    alphas: Vec<f64>,
    /// Aggregation size. Repeatable for ablate-k; single-valued elsewhere.
    #[arg(long = "k", value_name = "K")]
    k_values: Vec<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated method list.
    #[arg(long, value_delimiter = ',', value_name = "METHOD")]
    methods: Vec<String>,
    /// Reference share of the deterministic split.
    #[arg(long, value_name = "FRACTION")]
    ref_fraction: Option<f64>,
    /// Output directory for report files; stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Report formats: csv and/or jsonl (comma-separated).
    #[arg(long, value_delimiter = ',', value_name = "FMT")]
    format: Vec<String>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate methods on a score tensor or a single synthetic task.
    Run {
        /// Score-tensor package directory.
        #[arg(long, value_name = "DIR")]
        tensor: Option<PathBuf>,
        /// Synthetic task spec (JSON file).
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo coverage simulation on synthetic tasks.
    Sim {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the aggregation size k, everything else fixed.
    AblateK {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare the data-reuse variants on identical tasks.
    AblateSplits {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Load and fully validate a score-tensor package.
    Validate {
        #[arg(long, value_name = "DIR")]
        tensor: PathBuf,
    },
    /// Generate a synthetic task and save it as a score-tensor package.
    ExportSynthetic {
        #[arg(long, value_name = "FILE")]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

/// Parse arguments from the process environment and execute; returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_usage = err.use_stderr();
            let _ = err.print();
            return if is_usage { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &RunError) -> i32 {
    match err {
        RunError::Config(_) => 2,
        RunError::Sim(SimError::Spec { .. }) => 2,
        RunError::Package(_) | RunError::Sim(_) | RunError::Eval(_) | RunError::Io(_) => 3,
        RunError::Invariant(_) => 4,
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run {
            tensor,
            spec,
            common,
        } => {
            let source = match (&tensor, &spec) {
                (Some(dir), None) => DataSource::Tensor(Box::new(ScoreTensor::load(dir)?)),
                (None, Some(path)) => DataSource::Synthetic(load_spec_file(path)?),
                _ => {
                    return Err(config_error(
                        "source",
                        "exactly one of --tensor or --spec is required",
                    ))
                }
            };
            let config = resolve_config(&common, true, synthetic_seed(&source))?;
            let report = runner::run_experiment(&config, &source)?;
            emit(&report, &common)
        }
        Command::Sim { spec, common } => {
            let spec = load_spec(spec.as_deref())?;
            let config = resolve_config(&common, true, Some(spec.seed))?;
            let report = runner::simulate(&config, &spec)?;
            emit(&report, &common)
        }
        Command::AblateK { spec, common } => {
            let spec = load_spec(spec.as_deref())?;
            let config = resolve_config(&common, false, Some(spec.seed))?;
            let k_values: Vec<usize> = if common.k_values.is_empty() {
                (1..=10).collect()
            } else {
                common.k_values.clone()
            };
            let report = runner::ablate_k(&config, &spec, &k_values)?;
            emit(&report, &common)
        }
        Command::AblateSplits { spec, common } => {
            let spec = load_spec(spec.as_deref())?;
            let config = resolve_config(&common, true, Some(spec.seed))?;
            let report = runner::ablate_splits(&config, &spec)?;
            emit(&report, &common)
        }
        Command::Validate { tensor } => {
            let loaded = ScoreTensor::load(&tensor)?;
            println!(
                "ok: n={} T={} L={} full={} truth={}",
                loaded.n(),
                loaded.test_count(),
                loaded.label_count(),
                if loaded.has_full() { "yes" } else { "no" },
                if loaded.truth().is_some() {
                    "yes"
                } else {
                    "no"
                },
            );
            Ok(())
        }
        Command::ExportSynthetic { spec, seed, out } => {
            let mut spec = load_spec(spec.as_deref())?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let tensor = sim::generate_task(&spec)?;
            let out = output_dir(Some(out)).expect("explicit directory");
            tensor.save(&out)?;
            eprintln!("wrote score tensor package to {}", out.display());
            Ok(())
        }
    }
}

fn config_error(field: &'static str, message: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Field {
        field,
        message: message.into(),
    })
}

fn synthetic_seed(source: &DataSource) -> Option<u64> {
    match source {
        DataSource::Synthetic(spec) => Some(spec.seed),
        DataSource::Tensor(_) => None,
    }
}

/// Fold config-file values and flags into one validated config. Precedence:
/// defaults < spec-file seed < config file < flags < environment.
fn resolve_config(
    common: &CommonArgs,
    single_k: bool,
    spec_seed: Option<u64>,
) -> Result<ExperimentConfig, RunError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?
        }
        None => {
            let mut config = ExperimentConfig::default();
            if let Some(seed) = spec_seed {
                config.seed = seed;
            }
            config
        }
    };
    if !common.alphas.is_empty() {
        config.alphas = common.alphas.clone();
    }
    if single_k {
        match common.k_values.len() {
            0 => {}
            1 => config.k = common.k_values[0],
            more => {
                return Err(config_error(
                    "k",
                    format!("this command takes a single --k, got {more}"),
                ))
            }
        }
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.trials = trials;
    }
    if !common.methods.is_empty() {
        config.methods = common
            .methods
            .iter()
            .map(|name| name.parse())
            .collect::<Result<_, ConfigError>>()?;
    }
    if let Some(fraction) = common.ref_fraction {
        config.ref_fraction = fraction;
    }
    if let Some(workers) = common.workers {
        config.workers = Some(workers);
    }
    if let Ok(value) = std::env::var("CAOS_WORKERS") {
        let workers: usize = value.parse().map_err(|_| {
            config_error("workers", format!("CAOS_WORKERS={value:?} is not a number"))
        })?;
        config.workers = Some(workers);
    }
    config.validate()?;
    Ok(config)
}

fn load_spec(path: Option<&Path>) -> Result<SyntheticTaskSpec, RunError> {
    match path {
        None => Ok(SyntheticTaskSpec::default()),
        Some(path) => load_spec_file(path),
    }
}

fn load_spec_file(path: &Path) -> Result<SyntheticTaskSpec, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error("spec", format!("{}: {e}", path.display())))?;
    let spec: SyntheticTaskSpec = serde_json::from_str(&text)
        .map_err(|e| config_error("spec", format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

/// `CAOS_OUT` overrides any requested output directory.
fn output_dir(requested: Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var_os("CAOS_OUT") {
        Some(dir) => Some(PathBuf::from(dir)),
        None => requested,
    }
}

fn emit(report: &EvalReport, common: &CommonArgs) -> Result<(), RunError> {
    let formats: Vec<ReportFormat> = if common.format.is_empty() {
        vec![ReportFormat::Csv]
    } else {
        common
            .format
            .iter()
            .map(|name| {
                name.parse()
                    .map_err(|message| config_error("format", message))
            })
            .collect::<Result<_, RunError>>()?
    };
    match output_dir(common.out.clone()) {
        Some(dir) => {
            for path in report.save(&dir, &formats)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            for format in &formats {
                match format {
                    ReportFormat::Csv => print!("{}", report.csv_string()),
                    ReportFormat::Jsonl => print!("{}", report.jsonl_string()),
                }
            }
        }
    }
    Ok(())
}
