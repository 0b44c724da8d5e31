//! `oamsim` — reproducible pipelines over the OAM photon-pair simulator:
//! displacement sweeps, coincidence histograms, two-qubit tomography, and a
//! one-shot summary report.

// Validation comparisons are written `!(x > 0)` so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

/// CLI failure with its process exit code: 2 for configuration/usage
/// problems, 3 for numerical failures, 1 for I/O.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<oamsim_core::Error> for CliError {
    fn from(e: oamsim_core::Error) -> Self {
        match e {
            oamsim_core::Error::QuadratureNotConverged { .. }
            | oamsim_core::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            oamsim_core::Error::InvalidInput(_) | oamsim_core::Error::Parse(_) => {
                CliError::Config(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "oamsim",
    version,
    about = "Simulate and analyze an OAM photon-pair entanglement experiment",
    propagate_version = true
)]
struct Cli {
    /// JSON run configuration; defaults to the bundled experiment-anchored
    /// values (see configs/paper.json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configuration's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Displacement sweeps of the anti-Stokes analyzer.
    Sweep {
        #[command(subcommand)]
        action: SweepAction,
    },
    /// Time-resolved coincidence histograms.
    Hist {
        #[command(subcommand)]
        action: HistAction,
    },
    /// Two-qubit state tomography.
    Tomo {
        #[command(subcommand)]
        action: TomoAction,
    },
    /// Run the full pipeline and emit the g / fidelity / concurrence /
    /// entanglement-of-formation summary.
    Report(ReportArgs),
    /// Print the effective configuration as JSON (after --config/--seed).
    Config,
}

#[derive(Subcommand)]
enum SweepAction {
    /// Simulate sweep count data (CSV).
    Simulate(SweepSimArgs),
    /// Fit sweep data to the squared projection amplitude (JSON).
    Fit(SweepFitArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BalancedSign {
    Plus,
    Minus,
}

#[derive(Args)]
pub struct SweepSimArgs {
    /// Stokes hologram displacement, mm.
    #[arg(long, default_value_t = 0.0, conflicts_with_all = ["stokes_far", "stokes_balanced"])]
    pub stokes_x0: f64,

    /// Park the Stokes hologram far outside the beam (projects |0>).
    #[arg(long, conflicts_with = "stokes_balanced")]
    pub stokes_far: bool,

    /// Put the Stokes hologram at the balanced-superposition displacement
    /// with the given sign.
    #[arg(long, value_enum)]
    pub stokes_balanced: Option<BalancedSign>,

    /// Collected diffraction order of the Stokes hologram (+1 or -1).
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub stokes_order: i32,

    /// Collected diffraction order of the anti-Stokes hologram (+1 or -1).
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub antistokes_order: i32,

    /// Sweep range start, mm.
    #[arg(long, default_value_t = -2.4, allow_hyphen_values = true)]
    pub x0_min: f64,

    /// Sweep range end, mm.
    #[arg(long, default_value_t = 2.4, allow_hyphen_values = true)]
    pub x0_max: f64,

    /// Number of sweep points.
    #[arg(long, default_value_t = 25)]
    pub points: usize,

    /// Accumulation time per point, s.
    #[arg(long, default_value_t = 500.0)]
    pub point_duration_s: f64,

    /// Emit the exact expected signal instead of Poisson-sampled counts.
    #[arg(long)]
    pub noiseless: bool,

    /// Output CSV path (relative paths land in --out).
    #[arg(long, default_value = "sweep.csv")]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct SweepFitArgs {
    /// Sweep CSV to fit (relative paths resolve against --out).
    #[arg(long, default_value = "sweep.csv")]
    pub input: PathBuf,

    /// Initial θ guess, rad.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub theta0: f64,

    /// Initial waist guess, mm.
    #[arg(long, default_value_t = 0.6)]
    pub w0: f64,

    /// Hologram order of the swept analyzer assumed by the model (+1 or -1).
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub order: i32,

    /// Output JSON path.
    #[arg(long, default_value = "sweep_fit.json")]
    pub output: PathBuf,
}

#[derive(Subcommand)]
enum HistAction {
    /// Simulate a time-resolved coincidence histogram (CSV).
    Simulate(HistSimArgs),
    /// Analyze a histogram: background, g(τ), normalized signal (JSON).
    Analyze(HistAnalyzeArgs),
}

#[derive(Args)]
pub struct HistSimArgs {
    /// Output CSV path.
    #[arg(long, default_value = "histogram.csv")]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct HistAnalyzeArgs {
    /// Histogram CSV to analyze.
    #[arg(long, default_value = "histogram.csv")]
    pub input: PathBuf,

    /// Delay at which to report g, ns (defaults to the config's peak delay).
    #[arg(long)]
    pub tau_ns: Option<f64>,

    /// Output JSON path.
    #[arg(long, default_value = "hist_analysis.json")]
    pub output: PathBuf,
}

#[derive(Subcommand)]
enum TomoAction {
    /// Simulate tomography records for the canonical 16-setting design (JSON).
    Simulate(TomoSimArgs),
    /// Maximum-likelihood reconstruction from records (JSON).
    Reconstruct(TomoReconstructArgs),
}

#[derive(Args)]
pub struct TomoSimArgs {
    /// Expected counts per setting.
    #[arg(long, default_value_t = 1e5)]
    pub counts_per_setting: f64,

    /// Output JSON path.
    #[arg(long, default_value = "tomo_records.json")]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct TomoReconstructArgs {
    /// Records JSON (either the wrapped artifact or a bare record list).
    #[arg(long, default_value = "tomo_records.json")]
    pub input: PathBuf,

    /// Maximum optimizer iterations.
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,

    /// Log-likelihood improvement tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Output JSON path.
    #[arg(long, default_value = "tomography.json")]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Expected counts per tomography setting.
    #[arg(long, default_value_t = 1e5)]
    pub counts_per_setting: f64,

    /// Output JSON path.
    #[arg(long, default_value = "report.json")]
    pub output: PathBuf,
}

/// Everything a command needs: the effective config, its hash, and the
/// output directory.
pub struct Context {
    pub config: RunConfig,
    pub config_sha256: String,
    pub out_dir: PathBuf,
}

impl Context {
    /// Resolve an artifact path: relative paths land in the output directory.
    pub fn artifact_path(&self, p: &PathBuf) -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            self.out_dir.join(p)
        }
    }
}

fn build_context(cli: &Cli) -> Result<Context, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::paper_defaults(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)?;
    let config_sha256 = config.sha256();
    Ok(Context {
        config,
        config_sha256,
        out_dir,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if matches!(cli.command, Command::Config) {
        // Config dump never touches the output directory.
        let mut config = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::paper_defaults(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        config.validate()?;
        let mut text =
            serde_json::to_string_pretty(&config).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        print!("{text}");
        return Ok(());
    }
    let ctx = build_context(&cli)?;
    match cli.command {
        Command::Sweep { action } => match action {
            SweepAction::Simulate(args) => commands::sweep_simulate(&ctx, &args),
            SweepAction::Fit(args) => commands::sweep_fit(&ctx, &args),
        },
        Command::Hist { action } => match action {
            HistAction::Simulate(args) => commands::hist_simulate(&ctx, &args),
            HistAction::Analyze(args) => commands::hist_analyze(&ctx, &args),
        },
        Command::Tomo { action } => match action {
            TomoAction::Simulate(args) => commands::tomo_simulate(&ctx, &args),
            TomoAction::Reconstruct(args) => commands::tomo_reconstruct(&ctx, &args),
        },
        Command::Report(args) => commands::report(&ctx, &args),
        Command::Config => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oamsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
