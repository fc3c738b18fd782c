mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use privsynth::pmm::ConsistencyPolicy;
use privsynth::Mechanism;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "privsynth", version, about = "Differentially private synthetic data on the unit cube")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a mechanism once and write the synthetic points as CSV.
    Generate(RunArgs),
    /// Sweep sizes, measure W1 over repeated trials and fit the rate.
    Rate(RunArgs),
    /// Exact privacy audit of the noisy-count release on a tiny instance.
    Audit(AuditArgs),
    /// Distance between two CSV point sets.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON manifest (or metadata written by `generate`); flags override it.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismArg>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Dataset size; a comma-separated list for `rate`.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = "PRIVSYNTH_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// PMM partition depth.
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    snap_depth: Option<u32>,
    /// PSMM requested cell count.
    #[arg(long)]
    cells: Option<u64>,
    /// PSMM output size.
    #[arg(long)]
    denominator: Option<u64>,
    /// Source CSV; uniform points are drawn when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Min-max scale every input column to [0, 1].
    #[arg(long)]
    normalize: bool,
    /// `generate`: CSV path (metadata goes to `<output>.json`).
    /// `rate`: path stem for `<output>.json` and `<output>.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Format of what is printed to stdout.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismArg,
    #[arg(long)]
    eps: f64,
    /// Half-width of the noise window enumerated around every count.
    #[arg(long, default_value_t = 40)]
    window: i64,
    /// Points per base dataset (default 3 for pmm, 2 for psmm).
    #[arg(long)]
    n: Option<usize>,
    /// PMM partition depth.
    #[arg(long, default_value_t = 2)]
    depth: u32,
    /// PSMM cell count.
    #[arg(long, default_value_t = 3)]
    cells: u64,
    /// Override the PMM schedule (comma-separated sigmas).
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct EvalArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "auto")]
    method: Method,
    /// Snapping depth for `snapped` (default 12).
    #[arg(long)]
    snap_depth: Option<u32>,
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MechanismArg {
    Pmm,
    Psmm,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Self {
        match m {
            MechanismArg::Pmm => Mechanism::Pmm,
            MechanismArg::Psmm => Mechanism::Psmm,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Uniform,
    Proportional,
}

impl From<PolicyArg> for ConsistencyPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Uniform => ConsistencyPolicy::Uniform,
            PolicyArg::Proportional => ConsistencyPolicy::Proportional,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    /// `1d` for one dimension, `lp` for small supports, `snapped` otherwise.
    Auto,
    #[value(name = "1d")]
    OneD,
    Lp,
    Bl,
    Snapped,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Rate(args) => commands::rate(args),
        Command::Audit(args) => commands::audit(args),
        Command::Eval(args) => commands::eval(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::AuditFailed) => ExitCode::from(3),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
