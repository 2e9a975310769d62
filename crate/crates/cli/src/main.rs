//! Command line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use morphca::evolution::Treatment;
use morphca_cli::commands;
use morphca_cli::config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "morphca", version, about = "Evolve neural cellular automata toward target shapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured evolution experiment.
    Evolve(ExperimentArgs),
    /// Recompute a saved champion's scores.
    Replay {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Champion JSON file written by evolve.
        #[arg(long)]
        champion: PathBuf,
    },
    /// Aggregate run logs into mean curves with confidence bands.
    Curves {
        /// Output directory of a finished evolve campaign.
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect final scores of all runs plus a random-search baseline.
    Scatter(ExperimentArgs),
    /// Operations on built-in target shapes.
    #[command(subcommand)]
    Shapes(ShapesCommand),
}

#[derive(Subcommand)]
enum ShapesCommand {
    /// Render a target shape as an ASCII PGM.
    Render {
        /// Shape kind: square, circle, triangle, biped, or circular_biped.
        #[arg(long)]
        kind: String,
        /// Grid side length.
        #[arg(long, default_value_t = 25)]
        m: usize,
        /// Size parameter; each kind has a default scaled to the grid.
        #[arg(long)]
        param: Option<usize>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A config file plus field-by-field command line overrides.
#[derive(Args)]
struct ExperimentArgs {
    /// Experiment TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Override the treatment: bi_error, tri_error_empowerment, tri_error,
    /// or bi_empowerment.
    #[arg(long)]
    treatment: Option<String>,
    /// Override the target shape kind.
    #[arg(long)]
    shape: Option<String>,
    /// Override the shape size parameter.
    #[arg(long)]
    param: Option<usize>,
    /// Override the grid side length.
    #[arg(long)]
    m: Option<usize>,
    /// Override the number of development steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the population size.
    #[arg(long)]
    pop: Option<usize>,
    /// Override the generation count.
    #[arg(long)]
    gens: Option<usize>,
    /// Override the number of repeated runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the evaluation worker count; 0 means one per core.
    #[arg(long)]
    workers: Option<usize>,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            treatment: self.treatment.as_deref().map(|s| s.parse::<Treatment>()).transpose()?,
            shape: self.shape.clone(),
            param: self.param,
            m: self.m,
            steps: self.steps,
            pop: self.pop,
            gens: self.gens,
            runs: self.runs,
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
        };
        Ok(ExperimentConfig::load(&self.config)?.with_overrides(&overrides))
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Evolve(args) => {
            let config = args.load()?;
            let artifacts = commands::run_evolve(&config)?;
            println!("wrote {} runs under {}", artifacts.len(), config.out_dir.display());
        }
        Command::Replay { experiment, champion } => {
            let config = experiment.load()?;
            let summary = commands::run_replay(&config, &champion)?;
            println!("loss={} empowerment_bits={}", summary.loss, summary.empowerment_bits);
        }
        Command::Curves { out } => {
            let path = commands::run_curves(&out)?;
            println!("wrote {}", path.display());
        }
        Command::Scatter(args) => {
            let config = args.load()?;
            let path = commands::run_scatter(&config)?;
            println!("wrote {}", path.display());
        }
        Command::Shapes(ShapesCommand::Render { kind, m, param, out }) => {
            let text = commands::render_shape(&kind, m, param)?;
            match out {
                Some(path) => std::fs::write(&path, text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
