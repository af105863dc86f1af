//! Command-line front end: simulate trajectories, learn certificates
//! from trajectory CSVs, validate them, and compare against model-based
//! oracles. Analysis results are emitted as JSON reports whose payload
//! is byte-identical across reruns of the same command.

mod commands;
mod model;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lticert::certificates::CertificateError;
use lticert::trajectory::DiffScheme;

#[derive(Parser)]
#[command(
    name = "lticert",
    version,
    about = "Data-driven stability and performance certificates for LTI systems"
)]
struct Cli {
    /// Seed for randomized validation sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiffArg {
    Forward,
    Central,
}

impl From<DiffArg> for DiffScheme {
    fn from(value: DiffArg) -> Self {
        match value {
            DiffArg::Forward => DiffScheme::Forward,
            DiffArg::Central => DiffScheme::Central,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Zoh,
    Rk4,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputArg {
    Zero,
    Step,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WhichArg {
    LyapEq,
    Energy,
    Gain,
    All,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON file with fields A, B, C, D (row-major arrays).
    #[arg(long)]
    model: String,
    /// Initial state, comma separated (for example "2,2").
    #[arg(long)]
    x0: String,
    /// Input excitation.
    #[arg(long, value_enum, default_value_t = InputArg::Zero)]
    input: InputArg,
    /// Horizon in seconds.
    #[arg(long = "t-final")]
    t_final: f64,
    /// Step in seconds.
    #[arg(long)]
    dt: f64,
    /// Integration method.
    #[arg(long, value_enum, default_value_t = MethodArg::Zoh)]
    method: MethodArg,
    /// Output trajectory CSV path.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct LyapArgs {
    /// Trajectory CSV.
    traj: String,
    #[arg(long, default_value_t = 1e-3)]
    c1: f64,
    #[arg(long, default_value_t = 1e-3)]
    c2: f64,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    /// Level value for boundary emission (requires --levelset-out, n = 2).
    #[arg(long = "emit-levelset", requires = "levelset_out")]
    emit_levelset: Option<f64>,
    /// CSV path for the emitted level-set boundary points.
    #[arg(long = "levelset-out")]
    levelset_out: Option<String>,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct LyapEqArgs {
    traj: String,
    /// Weight matrix: "identity" or a JSON file holding a square array.
    #[arg(long, default_value = "identity")]
    q: String,
    /// Use only this many evenly spaced samples (default: all).
    #[arg(long)]
    points: Option<usize>,
    /// Model JSON: substitute exact derivatives A x + B u for the
    /// finite differences.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EnergyArgs {
    traj: String,
    /// Initial state for the bound (default: first trajectory sample).
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PeakArgs {
    traj: String,
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    /// CSV path for the ellipsoid boundary points (n = 2).
    #[arg(long = "emit-ellipse")]
    emit_ellipse: Option<String>,
    /// Model JSON: also verify invariance by simulating 100 seeded
    /// boundary trajectories.
    #[arg(long = "validate-model")]
    validate_model: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct GainArgs {
    traj: String,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    traj: String,
    /// Model JSON file for the oracle side.
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, default_value_t = WhichArg::All)]
    which: WhichArg,
    /// Horizons for a gain sweep, comma separated (for example "2,4,8,16").
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, value_enum, default_value_t = DiffArg::Forward)]
    diff: DiffArg,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a model and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Learn a Lyapunov certificate from a trajectory.
    Lyap(LyapArgs),
    /// Recover the Lyapunov-equation solution from sampled data.
    LyapEq(LyapEqArgs),
    /// Learn an output-energy bound.
    Energy(EnergyArgs),
    /// Learn an output-peak bound and its invariant ellipsoid.
    Peak(PeakArgs),
    /// Learn an L2 / RMS gain bound.
    Gain(GainArgs),
    /// Compute data-driven values and model-based oracles side by side.
    Compare(CompareArgs),
}

/// Faults map to exit codes: 1 for input and I/O problems, 2 for
/// analysis verdicts (the data refused the certificate; the invocation
/// itself was fine).
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Analysis(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Analysis(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }
}

impl From<lticert::trajectory::TrajectoryError> for CliError {
    fn from(e: lticert::trajectory::TrajectoryError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CertificateError> for CliError {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::Infeasible(_)
            | CertificateError::Unbounded(_)
            | CertificateError::RankDeficient
            | CertificateError::ZeroLambda
            | CertificateError::IterationLimit
            | CertificateError::NotPositiveDefiniteResult => CliError::Analysis(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<lticert::oracles::OracleError> for CliError {
    fn from(e: lticert::oracles::OracleError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Lyap(args) => commands::lyap(&args),
        Command::LyapEq(args) => commands::lyap_eq(&args),
        Command::Energy(args) => commands::energy(&args),
        Command::Peak(args) => commands::peak(&args, cli.seed),
        Command::Gain(args) => commands::gain(&args),
        Command::Compare(args) => commands::compare(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
