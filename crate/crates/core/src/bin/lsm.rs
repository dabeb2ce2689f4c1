use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsm_core::harness::{self, commands, Overrides, DATASET_FILE};
use lsm_core::Error;

#[derive(Parser)]
#[command(name = "lsm", version, about = "Near-field imaging of a rough interface and a buried obstacle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the near-field dataset.
    Forward(RunArgs),
    /// Compute the indicator map from a stored dataset.
    Invert(RunArgs),
    /// Forward solve followed by inversion.
    Pipeline(RunArgs),
    /// List the built-in presets.
    Gallery,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scene (see `lsm gallery`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Relative noise level added to the data.
    #[arg(long, value_name = "REAL")]
    noise: Option<f64>,
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Fixed regularization parameter.
    #[arg(long, value_name = "REAL", conflicts_with = "morozov")]
    alpha: Option<f64>,
    /// Discrepancy principle with this noise level.
    #[arg(long, value_name = "REAL")]
    morozov: Option<f64>,
    /// X1MIN:X1MAX:STEP,X2MIN:X2MAX:STEP
    #[arg(long, value_name = "SPEC", allow_hyphen_values = true)]
    grid: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "INT")]
    threads: Option<usize>,
    /// 401 receivers, sampling step 0.06, 128 boundary nodes.
    #[arg(long)]
    paper_scale: bool,
    /// Plain Euclidean norm of the regularized solution.
    #[arg(long)]
    unweighted_norm: bool,
    /// Cut-off for the mask output.
    #[arg(long, value_name = "REAL")]
    threshold: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Dataset to invert (default OUT/dataset.lsmnf).
    #[arg(long, value_name = "PATH")]
    dataset: Option<PathBuf>,
}

impl From<RunArgs> for Overrides {
    fn from(a: RunArgs) -> Self {
        Overrides {
            config: a.config,
            preset: a.preset,
            noise: a.noise,
            seed: a.seed,
            alpha: a.alpha,
            morozov: a.morozov,
            grid: a.grid,
            threads: a.threads,
            paper_scale: a.paper_scale,
            unweighted_norm: a.unweighted_norm,
            threshold: a.threshold,
            out: a.out,
            dataset: a.dataset,
        }
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Forward,
    Invert,
    Pipeline,
}

fn run(command: Command) -> lsm_core::Result<()> {
    let (stage, args) = match command {
        Command::Gallery => {
            print!("{}", commands::gallery_text());
            return Ok(());
        }
        Command::Forward(a) => (Stage::Forward, a),
        Command::Invert(a) => (Stage::Invert, a),
        Command::Pipeline(a) => (Stage::Pipeline, a),
    };
    let overrides = Overrides::from(args);
    let config = harness::resolve_config(&overrides)?;
    harness::configure_threads(config.run.threads)?;
    let summary = match stage {
        Stage::Forward => harness::cmd_forward(&config)?.summary(),
        Stage::Invert => {
            let dataset = overrides.dataset.unwrap_or_else(|| config.run.out.join(DATASET_FILE));
            harness::cmd_invert(&dataset, &config)?.summary()
        }
        Stage::Pipeline => harness::cmd_pipeline(&config)?.summary(),
    };
    print!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(3)
    }
}
