//! `sigtestsim`: paired significance tests and simulation-based error-rate
//! experiments from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "sigtestsim",
    version,
    about = "Paired significance tests and simulated error rates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run paired tests on two score lists or two systems of a matrix.
    Test(TestArgs),
    /// Fit a stochastic model to two systems and save it as JSON.
    Fit(FitArgs),
    /// Simulate new topics from a saved model.
    Simulate(SimulateArgs),
    /// Run a Type I, power or Type III experiment.
    Experiment(ExperimentArgs),
    /// Re-render charts from a report CSV.
    Plot(PlotArgs),
    /// Write a synthetic score matrix.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct PairInput {
    /// Baseline scores, one per line.
    #[arg(long, requires = "e", conflicts_with = "matrix")]
    b: Option<PathBuf>,
    /// Experimental scores, one per line.
    #[arg(long, requires = "b", conflicts_with = "matrix")]
    e: Option<PathBuf>,
    /// Score matrix CSV (`topic` column, then one column per system).
    #[arg(long, requires_all = ["baseline", "experimental"])]
    matrix: Option<PathBuf>,
    /// Baseline system id in the matrix.
    #[arg(long)]
    baseline: Option<String>,
    /// Experimental system id in the matrix.
    #[arg(long)]
    experimental: Option<String>,
    /// Effectiveness measure (ap, ndcg, err, p10, rr).
    #[arg(long, default_value = "ap")]
    measure: String,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    input: PairInput,
    /// Comma-separated tests, or `all`.
    #[arg(long, default_value = "all")]
    tests: String,
    /// Tails of the reported p-value column.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    tails: u8,
    /// Replicas for the resampling tests.
    #[arg(long, default_value_t = sigtestsim::paired::DEFAULT_REPLICAS)]
    replicas: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Sign-test tie threshold.
    #[arg(long, default_value_t = sigtestsim::paired::DEFAULT_SIGN_THRESHOLD)]
    h: f64,
    /// Also write the results as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: PairInput,
    /// Store the null model (experimental margin replaced by the baseline).
    #[arg(long, conflicts_with = "delta")]
    null: bool,
    /// Store an effect model with this true mean difference.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 50)]
    n_topics: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Type1,
    Power,
    Type3,
}

impl From<ModeArg> for sigtestsim::experiments::ExperimentMode {
    fn from(m: ModeArg) -> Self {
        use sigtestsim::experiments::ExperimentMode;
        match m {
            ModeArg::Type1 => ExperimentMode::Type1,
            ModeArg::Power => ExperimentMode::Power,
            ModeArg::Type3 => ExperimentMode::Type3,
        }
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    mode: ModeArg,
    /// Score matrix CSV; a synthetic 20-system matrix when absent.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value = "ap")]
    measure: String,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    tails: u8,
    /// Significance levels, `a:b:step` or a comma list.
    #[arg(long, default_value = "0.001,0.005,0.01:0.1:0.01")]
    alpha_grid: String,
    /// Effect sizes for power and Type III runs.
    #[arg(long, default_value = "0.01:0.1:0.01")]
    delta_grid: String,
    /// Comma-separated topic counts.
    #[arg(long, default_value = "50")]
    n_topics: String,
    #[arg(long, default_value_t = sigtestsim::experiments::DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = sigtestsim::experiments::HARNESS_REPLICAS)]
    replicas: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "all")]
    tests: String,
    #[arg(long, default_value_t = sigtestsim::paired::DEFAULT_SIGN_THRESHOLD)]
    h: f64,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Report CSV written by `experiment`.
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Significance level of power and Type III charts.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    n_topics: usize,
    #[arg(long, default_value_t = 20)]
    systems: usize,
    #[arg(long, default_value = "ap")]
    measure: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "matrix.csv")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => commands::test(a),
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Plot(a) => commands::plot(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
