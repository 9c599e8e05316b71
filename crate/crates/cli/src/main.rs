use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod df;
mod fit;
mod output;
mod report;
mod simulate;

/// Simulation benchmark for best subset, forward stepwise, lasso and
/// relaxed lasso.
#[derive(Debug, Parser)]
#[command(name = "sparsebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenarios in a scenario file and write long, summary and
    /// timing CSVs.
    Simulate(SimulateArgs),
    /// Fit one method's full path on a dataset CSV.
    Fit(FitArgs),
    /// Monte Carlo degrees of freedom at a fixed design.
    Df(DfArgs),
    /// Merge long-format result files and emit summaries and tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TuningArg {
    Val,
    Oracle,
    Both,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated subset of lasso,relaxo,fs,bs.
    #[arg(long, default_value = "lasso,relaxo,fs,bs")]
    methods: String,
    #[arg(long, value_enum, default_value = "val")]
    tuning: TuningArg,
    /// Wall-clock budget per subset size for best subset.
    #[arg(long)]
    budget_seconds: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Training CSV with columns x1..xp,y.
    #[arg(long)]
    data: PathBuf,
    /// Validation CSV; when given the tuned coefficients are written too.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// One of lasso, relaxo, fs, bs.
    #[arg(long)]
    method: String,
    #[arg(long)]
    nlambda: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    budget_seconds: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct DfArgs {
    /// Scenario file with a single (rho, snr) combination. Without it the
    /// design is n=70, p=30, s=5, beta type 2, rho=0.35, snr=0.7.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated subset of null,ols,lasso,fs,bs.
    #[arg(long, default_value = "null,ols,lasso,fs,bs")]
    methods: String,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lasso grid size.
    #[arg(long, default_value_t = 10)]
    nlambda: usize,
    /// Largest subset size for stepwise and best subset.
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    budget_seconds: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Long-format result CSVs.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

/// Errors caused by bad input exit with 2, anything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    use sparsebench::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NonConvergence { .. } | E::PathPoint { .. } | E::TooManyFailures { .. } => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<output::InputError>().is_some() || cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SPARSEBENCH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| output::InputError(format!("SPARSEBENCH_THREADS must be a positive integer (got {v:?})")))?;
        if n == 0 {
            return Err(output::InputError("SPARSEBENCH_THREADS must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Fit(a) => fit::run(a),
        Command::Df(a) => df::run(a),
        Command::Report(a) => report::run(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
