mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fenn_core::{Error, ErrorClass};

/// Compile finite element functions into ReLU and tensor neural networks.
#[derive(Debug, Parser)]
#[command(name = "fenn", version)]
struct Cli {
    /// Worker threads (default: FENN_THREADS, else available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate, compile and self-check a network for a mesh function.
    Build(BuildArgs),
    /// Check a network against a mesh function on sampled points.
    Verify(VerifyArgs),
    /// Compare network sizes with the directed hyperplane counts of a mesh.
    Counts(CountsArgs),
    /// Write a Freudenthal mesh of the unit cube.
    Freudenthal(FreudenthalArgs),
    /// L^p error of compiled interpolants on refined Freudenthal meshes.
    Convergence(ConvergenceArgs),
    /// Compile a tensor finite element function into a tensor network.
    TnnBuild(TnnBuildArgs),
    /// Compare a tensor network with a tensor finite element function.
    TnnVerify(TnnVerifyArgs),
    /// Evaluate a network file at the points of a points file.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Random seed for all sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples per cell and region.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    function: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Network file to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Put the constant −R in the output bias instead of a neuron.
    #[arg(long, conflicts_with = "compact_support")]
    output_bias: bool,
    /// Subtract a domain bump so the network vanishes outside the hull.
    #[arg(long)]
    compact_support: bool,
    /// Monte Carlo samples for the mesh overlap and coverage check.
    #[arg(long, default_value_t = 20_000)]
    validation_samples: usize,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    function: PathBuf,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    compact_support: bool,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct CountsArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    network: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    /// Π sin(π x_k)
    Sine,
    /// Σ x_k²
    Quadratic,
    /// Σ x_k
    Linear,
}

impl Target {
    fn eval(self, x: &[f64]) -> f64 {
        match self {
            Target::Sine => x.iter().map(|t| (std::f64::consts::PI * t).sin()).product(),
            Target::Quadratic => x.iter().map(|t| t * t).sum(),
            Target::Linear => x.iter().sum(),
        }
    }
}

#[derive(Debug, Args)]
struct FreudenthalArgs {
    #[arg(long)]
    n: usize,
    /// Cells per axis.
    #[arg(long = "N")]
    cells: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Also write the nodal interpolant of `--target` here.
    #[arg(long)]
    function_output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Target::Sine)]
    target: Target,
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "Ns", value_delimiter = ',', default_values_t = [2, 4, 8, 16])]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = Target::Sine)]
    target: Target,
    /// ε(N) = scale · N^(−power).
    #[arg(long, default_value_t = 1e-3)]
    epsilon_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon_power: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per error estimate.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Accepted slope band.
    #[arg(long, default_value_t = -2.3, allow_negative_numbers = true)]
    slope_min: f64,
    #[arg(long, default_value_t = -1.7, allow_negative_numbers = true)]
    slope_max: f64,
    /// CSV file for the table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TnnBuildArgs {
    #[arg(long)]
    tensor_fe: PathBuf,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Relative CP residual accepted before falling back to an exact factorization.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Pad the rank to the matricization bound.
    #[arg(long)]
    whole_space_rank: bool,
}

#[derive(Debug, Args)]
struct TnnVerifyArgs {
    #[arg(long)]
    tnn: PathBuf,
    #[arg(long)]
    tensor_fe: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random points in addition to all grid nodes.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    points: PathBuf,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Parse => 2,
        ErrorClass::Validation => 3,
        ErrorClass::Compile => 4,
        ErrorClass::Verify => 5,
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Error> {
    let from_env = std::env::var("FENN_THREADS").ok().and_then(|v| v.parse().ok());
    if let Some(threads) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Build(a) => commands::build(a),
        Command::Verify(a) => commands::verify(a),
        Command::Counts(a) => commands::counts(a),
        Command::Freudenthal(a) => commands::freudenthal(a),
        Command::Convergence(a) => commands::convergence(a),
        Command::TnnBuild(a) => commands::tnn_build(a),
        Command::TnnVerify(a) => commands::tnn_verify(a),
        Command::Eval(a) => commands::eval(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
