//! Command-line surface: coefficient tables, sampling transcripts, limit laws and
//! convergence experiments, as JSON or CSV.
//!
//! Every output starts with a header carrying the seed, the sampling method and a
//! SHA-256 digest of the resolved configuration. Outputs depend only on that
//! configuration, never on the worker count or the output path.

mod commands;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use gibbs_core::gibbs::Method;
use gibbs_core::parallel::Execution;
use gibbs_core::species::{builtin, dsl, SpeciesSpec};
use gibbs_core::Error;

pub use output::Header;

#[derive(Debug, Parser)]
#[command(name = "gibbs", version, about = "Unlabelled Gibbs partitions: coefficients, sampling and limit laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Species: a file, inline DSL or JSON text, or a built-in name (`forests`, `trees`).
    #[arg(long, global = true, default_value = "forests")]
    pub spec: String,
    /// Truncation order N (defaults depend on the command).
    #[arg(long, global = true)]
    pub trunc: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Draws per size.
    #[arg(long, global = true, default_value_t = 1000)]
    pub samples: usize,
    /// Comma-separated sizes n.
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Largest remainder size tabulated individually.
    #[arg(long, global = true, default_value_t = 12)]
    pub cap: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sampling; 1 runs sequentially.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// `exact` (recursive method) or `rejection` (Boltzmann draws conditioned on size).
    #[arg(long, global = true, default_value = "exact")]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Coefficients of the inner, composite and derived composite series.
    Coeffs,
    /// Draws of S_n with the remainder of each draw, as JSON lines.
    Sample,
    /// Limit law of the remainder up to the cap, and the law of its component count.
    Limit,
    /// Ratio of composite to inner coefficients and its predicted limit.
    Asymptotics,
    /// Total variation between sampled remainders and the limit law.
    Tv {
        /// Compare sampled remainders with the exact law at small sizes instead.
        #[arg(long)]
        self_test: bool,
    },
    /// Monte Carlo check of E[y^f w^h] for the outer symmetry at the radius.
    Pgf {
        #[arg(long, default_value_t = 0.7)]
        y: f64,
        #[arg(long, default_value_t = 0.9)]
        w: f64,
    },
    /// Subexponential diagnostics, closure under composition and the analyticity probe.
    Diagnose {
        /// Offsets beyond the radius for the probe.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 1e-2, 1e-1])]
        eps: Vec<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Sample => "sample",
            Command::Limit => "limit",
            Command::Asymptotics => "asymptotics",
            Command::Tv { .. } => "tv",
            Command::Pgf { .. } => "pgf",
            Command::Diagnose { .. } => "diagnose",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for spec errors, 3 for violated preconditions, 4 for an exhausted sampling
    /// budget, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::UnknownName(_)
                | Error::IllFoundedRecursion(_)
                | Error::InnerHasConstantTerm
                | Error::Unsupported(_) => 2,
                Error::RejectionBudgetExceeded(_) => 4,
                _ => 3,
            },
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Fully resolved configuration of one run. Its JSON encoding is what the digest hashes.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub spec: SpeciesSpec,
    pub truncation: usize,
    pub seed: u64,
    pub samples: usize,
    pub sizes: Vec<usize>,
    pub cap: usize,
    pub method: Method,
    #[serde(skip)]
    pub format: Format,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Serialize for Command {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("name", self.name())?;
        match self {
            Command::Tv { self_test } => m.serialize_entry("self_test", self_test)?,
            Command::Pgf { y, w } => {
                m.serialize_entry("y", y)?;
                m.serialize_entry("w", w)?;
            }
            Command::Diagnose { eps } => m.serialize_entry("eps", eps)?,
            _ => {}
        }
        m.end()
    }
}

/// Reads a spec from a built-in name, a file, or inline DSL / JSON text.
pub fn load_spec(source: &str) -> CliResult<SpeciesSpec> {
    match source {
        "forests" => return Ok(builtin::forests()),
        "trees" => return Ok(builtin::polya_trees()),
        _ => {}
    }
    let path = Path::new(source);
    let text = if !source.contains(":=") && !source.trim_start().starts_with('{') && path.is_file() {
        std::fs::read_to_string(path)?
    } else {
        source.to_string()
    };
    Ok(dsl::parse_any(&text)?)
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> CliResult<Self> {
        let o = &cli.options;
        let spec = load_spec(&o.spec)?;
        let sizes = if !o.sizes.is_empty() {
            o.sizes.clone()
        } else {
            match &cli.command {
                Command::Sample => vec![8],
                Command::Tv { self_test: true } => vec![8],
                Command::Tv { self_test: false } => vec![20, 40, 80],
                _ => Vec::new(),
            }
        };
        let largest = sizes.iter().copied().max().unwrap_or(0);
        let truncation = match o.trunc {
            Some(t) => t,
            None => match &cli.command {
                Command::Coeffs => 12,
                Command::Sample => largest.max(2),
                Command::Asymptotics | Command::Diagnose { .. } => 400,
                Command::Limit | Command::Pgf { .. } => 300,
                Command::Tv { .. } => largest.max(300),
            },
        };
        if largest > truncation {
            return Err(Error::TruncationExceeded { requested: largest, truncation }.into());
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidArgument("sizes must be positive".into()).into());
        }
        Ok(RunConfig {
            command: cli.command.clone(),
            spec,
            truncation,
            seed: o.seed,
            samples: o.samples,
            sizes,
            cap: o.cap,
            method: o.method,
            format: o.format,
            workers: o.workers,
        })
    }

    /// Hex SHA-256 of the JSON encoding of the configuration.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }

    pub fn execution(&self) -> Execution {
        Execution::with_workers(self.workers)
    }
}

/// Runs one command and returns the bytes of its output.
pub fn render(config: &RunConfig) -> CliResult<Vec<u8>> {
    commands::execute(config)
}

/// Resolves the configuration, runs the command and writes its output.
pub fn run(cli: &Cli) -> CliResult<()> {
    let config = RunConfig::resolve(cli)?;
    let bytes = render(&config)?;
    match &cli.options.out {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
        }
    }
    Ok(())
}
