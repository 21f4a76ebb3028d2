//! Command-line experiment runner on top of `beamspace-core`.

pub mod config;
pub mod experiments;
pub mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use beamspace_core::Error as CoreError;
use clap::Parser;
use log::info;

pub use config::{preset, validate, Experiment, ExperimentConfig, Format, Settings};
pub use experiments::run_experiment;
pub use output::{Cell, ResultTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Infeasible { .. } | CoreError::FieldOfView(_) => 3,
                CoreError::Singular(_) | CoreError::Eigen(_) | CoreError::NotHermitian(_) => 4,
                CoreError::Io(_) | CoreError::Csv(_) => 1,
                _ => 2,
            },
            CliError::Output(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "beamspace-lab", version, about = "Run beamspace receiver experiments")]
pub struct Cli {
    /// Experiment to run; may instead come from --config or --preset.
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// JSON file with experiment parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in parameter set (table1, fig5, fig6, fig8, fig10).
    #[arg(long)]
    pub preset: Option<String>,
    /// Worker threads.
    #[arg(long, env = "BEAMSPACE_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Omit the timestamp line from the output.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Print diagnostics for the configuration and exit.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub params: ExperimentConfig,
}

impl Cli {
    /// Flags over config file over preset.
    pub fn merged_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut base = match &self.preset {
            Some(name) => preset(name)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            let file = ExperimentConfig::load(path)?;
            if let (Some(a), Some(b)) = (file.experiment, base.experiment) {
                if a != b {
                    return Err(CliError::Config(format!("config file runs {a} but the preset runs {b}")));
                }
            }
            base = file.over(base);
        }
        if let (Some(a), Some(b)) = (self.experiment, base.experiment) {
            if a != b {
                return Err(CliError::Config(format!("experiment {a} conflicts with configured {b}")));
            }
        }
        let flags = ExperimentConfig { experiment: self.experiment, ..self.params.clone() };
        Ok(flags.over(base))
    }
}

fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix {secs}")
}

/// Validates, runs and writes one experiment.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.merged_config()?;
    let diags = validate(&cfg);
    if cli.check {
        if diags.is_empty() {
            println!("ok");
            return Ok(());
        }
        return Err(CliError::Invalid(diags));
    }
    if !diags.is_empty() {
        return Err(CliError::Invalid(diags));
    }
    let settings = Settings::resolve(&cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    info!("running {} with seed {}", settings.experiment, settings.seed);
    let table = pool.install(|| run_experiment(&settings))?;
    info!("{} rows", table.rows.len());

    let ts = (!cli.no_timestamp).then(timestamp);
    match &settings.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, settings.format, ts.as_deref())?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write(stdout.lock(), settings.format, ts.as_deref())?;
        }
    }
    Ok(())
}
