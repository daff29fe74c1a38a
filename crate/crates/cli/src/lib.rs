//! `stensor` command-line harness.
//!
//! Exit codes: 0 success, 1 I/O or input-format failure, 2 usage or
//! parameter error, 3 a `--check` assertion failed.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};

mod commands;
pub mod config;
pub mod parse;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Check(_) => EXIT_CHECK,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<stensor::Error> for CliError {
    fn from(e: stensor::Error) -> Self {
        use stensor::Error as E;
        match e {
            E::Parameter(_) | E::DimMismatch(_) => CliError::Usage(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Parse { .. } | E::NoConvergence { .. } => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Default indefiniteness tolerance for tensors read back from disk.
pub const ANALYZE_INDEFINITE_TOL: f64 = 1e-6;

pub fn version_string() -> String {
    format!(
        "stensor {} (raw format {} v{})",
        env!("CARGO_PKG_VERSION"),
        String::from_utf8_lossy(stensor::io::RAW_MAGIC),
        stensor::io::RAW_FORMAT_VERSION
    )
}

#[derive(Parser, Debug)]
#[command(
    name = "stensor",
    about = "Structure tensors from filter banks and gradients",
    disable_version_flag = true,
    args_override_self = true
)]
pub struct Cli {
    /// Print version and format versions.
    #[arg(long)]
    pub version: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

pub const SUBCOMMANDS: &[&str] = &["repro-example", "synth", "bank", "tensor", "analyze", "compare"];

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate both constructions on the six-filter indefiniteness example.
    ReproExample(ReproArgs),
    /// Generate a synthetic image.
    Synth(SynthArgs),
    /// Apply a directional filter bank to an image.
    Bank(BankCommandArgs),
    /// Build a tensor field.
    Tensor(TensorArgs),
    /// Orientation, certainty and indefiniteness of a tensor field.
    Analyze(AnalyzeArgs),
    /// Run both filter-bank constructions on the same responses.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
pub struct ReproArgs {
    /// Six comma-separated filter magnitudes.
    #[arg(long)]
    pub q: Option<String>,
    /// Frame coefficients `alpha,beta`.
    #[arg(long)]
    pub coeff: Option<String>,
    /// markdown or csv.
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Grid extents, e.g. `64,64`.
    #[arg(long)]
    pub dims: String,
    /// Wave spec, repeatable: `angle=30;freq=0.785`, `dir=1,0,0;freq=1`
    /// or `bins=4,0`, plus optional `profile=`, `amp=`, `phase=`.
    #[arg(long, action = ArgAction::Append, required = true)]
    pub wave: Vec<String>,
    /// Periodic sampling; requires on-grid waves.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub periodic: bool,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Raw raster output.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional 8-bit preview of a 2-D result, rescaled to [0, 1].
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BankArgs {
    /// `icosa6` or `half_circle:K`; defaults by image rank.
    #[arg(long)]
    pub directions: Option<String>,
    /// quadrature or gabor.
    #[arg(long, default_value = "quadrature")]
    pub kind: String,
    /// Centre frequency in rad/sample.
    #[arg(long, default_value_t = stensor::filterbank::DEFAULT_CENTER_FREQUENCY)]
    pub center_frequency: f64,
    /// Radial bandwidth in octaves.
    #[arg(long, default_value_t = stensor::filterbank::DEFAULT_BANDWIDTH_OCTAVES)]
    pub bandwidth: f64,
    /// Angular cosine exponent.
    #[arg(long, default_value_t = 1)]
    pub exponent: u32,
    /// power or magnitude.
    #[arg(long)]
    pub response_mode: Option<String>,
}

#[derive(Args, Debug)]
pub struct BankCommandArgs {
    /// Image: `.pgm` or raw raster.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub bank: BankArgs,
    /// Response planes as raw raster.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Direction set as CSV.
    #[arg(long)]
    pub dump_directions: Option<PathBuf>,
    /// Transfer functions as raw raster.
    #[arg(long)]
    pub dump_transfer: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TensorArgs {
    /// gk, bg, gradient or spectral.
    #[arg(long)]
    pub construction: String,
    /// Image (`.pgm` or raw), or bank responses for gk/bg.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Frame coefficients `alpha,beta` for gk.
    #[arg(long)]
    pub coeff: Option<String>,
    #[command(flatten)]
    pub bank: BankArgs,
    /// Derivative scale for the gradient construction.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_d: f64,
    /// Integration scale for the gradient construction (0: none).
    #[arg(long, default_value_t = 3.0)]
    pub sigma_o: f64,
    /// periodic or reflect.
    #[arg(long, default_value = "periodic")]
    pub boundary: String,
    /// Form products on a 2x band-limited upsampled grid.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub upsample: bool,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Tensor field raw raster.
    #[arg(long)]
    pub input: PathBuf,
    /// Pixels excluded at each face of the grid.
    #[arg(long, default_value_t = 0)]
    pub margin: usize,
    /// Ground-truth orientation angle in degrees (2-D).
    #[arg(long)]
    pub truth_angle: Option<f64>,
    /// Ground-truth direction, comma-separated.
    #[arg(long)]
    pub truth_dir: Option<String>,
    #[arg(long, default_value_t = stensor::analysis::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Relative tolerance for indefinite pixels; float32 storage perturbs
    /// eigenvalues by about 1e-7 of the trace.
    #[arg(long, default_value_t = ANALYZE_INDEFINITE_TOL)]
    pub indefinite_tol: f64,
    /// Fail with exit code 3 when the mean angular error exceeds `--max-error-deg`.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub check: bool,
    #[arg(long, default_value_t = 0.5)]
    pub max_error_deg: f64,
    /// Summary CSV (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Indefiniteness CSV row with histogram.
    #[arg(long)]
    pub indefiniteness: Option<PathBuf>,
    /// Orientation colour image (2-D).
    #[arg(long)]
    pub orientation_ppm: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Image (`.pgm` or raw) or bank responses.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub bank: BankArgs,
    #[arg(long)]
    pub coeff: Option<String>,
    #[arg(long, default_value_t = stensor::analysis::DEFAULT_INDEFINITE_TOL)]
    pub indefinite_tol: f64,
    /// Indefiniteness CSV, one row per construction.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub min_eig_gk: Option<PathBuf>,
    #[arg(long)]
    pub min_eig_bg: Option<PathBuf>,
    /// Fail with exit code 3 unless the bg field is PSD everywhere.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub check: bool,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match run_inner(args, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn run_inner(args: Vec<OsString>, out: &mut dyn Write) -> CliResult<()> {
    let args = config::expand_config(args, SUBCOMMANDS)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp) => {
            write!(out, "{}", e.render())?;
            return Ok(());
        }
        Err(e) => {
            let text = e.render().to_string();
            let text = text.strip_prefix("error: ").unwrap_or(&text).trim_end().to_string();
            return Err(CliError::Usage(text));
        }
    };
    if cli.version {
        writeln!(out, "{}", version_string())?;
        return Ok(());
    }
    let command = cli
        .command
        .ok_or_else(|| CliError::Usage(format!("a subcommand is required: {}", SUBCOMMANDS.join(", "))))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| commands::dispatch(command, &mut buf));
    out.write_all(&buf)?;
    result
}
