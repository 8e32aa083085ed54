//! Experiment runner: spectra, bases, partitions and the full verification battery,
//! written as CSV, JSON and SVG.

pub mod commands;
pub mod output;
pub mod svg;

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plunge_core::spectral::OperatorConfig;
use plunge_core::Error;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "plunge-lab", version, about = "Eigenvalue plunge experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Spectrum,
    Basis,
    Partition,
    Verify,
    Report,
    Calibrate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the localization operator.
    Spectrum(RunArgs),
    /// Whitney intervals and local cosine atoms with their Gram summary.
    Basis(RunArgs),
    /// Low/medium/high classes with leakage and residual sums.
    Partition(RunArgs),
    /// Full assertion battery; exits 1 if any check fails.
    Verify(RunArgs),
    /// Spectrum, plot and verification report in one run.
    Report(RunArgs),
    /// Re-derives the calibrated constants.
    Calibrate(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Args)]
pub struct RunArgs {
    /// Length of the time interval.
    #[arg(long = "D", default_value_t = 8.0)]
    pub d: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Smoothness exponent; must equal 1/m when given.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Cutoff sharpness.
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    /// Gauss–Legendre nodes for the eigenproblem (default 16·D + 64).
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Samples per unit length for time-domain residuals.
    #[arg(long, default_value_t = 32.0)]
    pub grid_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
    pub formats: Vec<Format>,
    /// Shortest Whitney interval for `basis`.
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub delta_stop: f64,
    /// Margin parameter for `partition` (default: the calibrated choice).
    #[arg(long)]
    pub s: Option<f64>,
    /// Random instances for the counting-lemma check in `verify`.
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    /// Also re-solve at doubled quadrature order.
    #[arg(long)]
    pub refine: bool,
    /// Logarithmic eigenvalue axis in plots.
    #[arg(long)]
    pub log_scale: bool,
    /// Multiply every normalization constant by this factor (fault injection).
    #[arg(long)]
    pub fault_normalization: Option<f64>,
}

/// Fully resolved configuration, echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(rename = "D")]
    pub d: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub m: u32,
    pub quad_order: usize,
    pub grid_rate: f64,
    pub seed: u64,
    /// Not echoed, so reports do not depend on where they were written.
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub formats: BTreeSet<Format>,
    pub delta_stop: f64,
    pub s: Option<f64>,
    pub instances: u64,
    pub refine: bool,
    pub log_scale: bool,
    pub fault_normalization: Option<f64>,
}

impl RunConfig {
    pub fn resolve(command: CommandKind, a: &RunArgs) -> plunge_core::Result<Self> {
        let invalid = |m: String| Error::InvalidParameter(m);
        if !(a.d >= 2.0 && a.d.is_finite()) {
            return Err(invalid(format!("--D {} must be at least 2", a.d)));
        }
        if !(a.epsilon > 0.0 && a.epsilon < 0.5) {
            return Err(invalid(format!("--epsilon {} must lie in (0, 1/2)", a.epsilon)));
        }
        if a.m == 0 {
            return Err(invalid("--m must be positive".into()));
        }
        let eta = 1.0 / a.m as f64;
        if let Some(e) = a.eta {
            if (e - eta).abs() > 1e-12 {
                return Err(invalid(format!("--eta {e} must equal 1/m = {eta}")));
            }
        }
        let quad_order = a.quad_order.unwrap_or_else(|| OperatorConfig::default_quad_order(a.d));
        OperatorConfig::new(a.d, quad_order, a.grid_rate)?;
        if a.formats.is_empty() {
            return Err(invalid("--formats must name at least one format".into()));
        }
        if let Some(f) = a.fault_normalization {
            if !(f > 0.0 && f.is_finite()) {
                return Err(invalid(format!("--fault-normalization {f} must be positive")));
            }
        }
        Ok(Self {
            command,
            d: a.d,
            epsilon: a.epsilon,
            eta,
            m: a.m,
            quad_order,
            grid_rate: a.grid_rate,
            seed: a.seed,
            out_dir: a.out_dir.clone(),
            formats: a.formats.iter().copied().collect(),
            delta_stop: a.delta_stop,
            s: a.s,
            instances: a.instances,
            refine: a.refine,
            log_scale: a.log_scale,
            fault_normalization: a.fault_normalization,
        })
    }

    pub fn operator(&self) -> plunge_core::Result<OperatorConfig> {
        OperatorConfig::new(self.d, self.quad_order, self.grid_rate)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Failure of a command, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Numeric(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Numeric(Error::InvalidParameter(_)) => EXIT_INVALID,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Numeric(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (kind, args) = match &cli.command {
        Command::Spectrum(a) => (CommandKind::Spectrum, a),
        Command::Basis(a) => (CommandKind::Basis, a),
        Command::Partition(a) => (CommandKind::Partition, a),
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Report(a) => (CommandKind::Report, a),
        Command::Calibrate(a) => (CommandKind::Calibrate, a),
    };
    let cfg = match RunConfig::resolve(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("plunge-lab: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = match kind {
        CommandKind::Spectrum => commands::cmd_spectrum(&cfg).map(|_| true),
        CommandKind::Basis => commands::cmd_basis(&cfg).map(|_| true),
        CommandKind::Partition => commands::cmd_partition(&cfg).map(|_| true),
        CommandKind::Verify => commands::cmd_verify(&cfg).map(|r| r.pass),
        CommandKind::Report => commands::cmd_report(&cfg).map(|_| true),
        CommandKind::Calibrate => commands::cmd_calibrate(&cfg).map(|_| true),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("plunge-lab: {e}");
            e.exit_code()
        }
    }
}

/// Sizes the global thread pool from `PLUNGE_LAB_THREADS` when set.
pub fn init_threads() {
    if let Some(n) = std::env::var("PLUNGE_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
