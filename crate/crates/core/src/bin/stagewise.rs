use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stagewise::harness::{config::parse_seeds, run_experiment, ExperimentConfig};
use stagewise::lp_solver::{solve_support2, solve_support_m1, SimplexLp};
use stagewise::nonlinear::{eluder_dimension, FunctionClass};

#[derive(Parser)]
#[command(name = "stagewise", version, about = "Bandits under stage-wise cost constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by an INI config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds or ranges like `0..10`; overrides `[algorithm] seeds`.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Linear programs over the simplex.
    Lp {
        #[command(subcommand)]
        command: LpCommand,
    },
    /// Eluder dimension of a finite function class over all of its actions.
    Eluder {
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Subcommand)]
enum LpCommand {
    /// Solve a JSON `{"reward": [..], "cost": [[..], ..], "tau": [..]}` problem.
    Solve {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Prints a line, treating a closed pipe (as with `| head`) as success.
fn emit(text: &str) -> stagewise::Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> stagewise::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            threads,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = Some(out);
            }
            if let Some(s) = seeds {
                cfg.algorithm.seeds = parse_seeds(&s)?;
            }
            let exp = run_experiment(&cfg, threads)?;
            emit(&serde_json::to_string_pretty(&exp.summary)?)?;
        }
        Command::Lp {
            command: LpCommand::Solve { input },
        } => {
            let lp: SimplexLp = serde_json::from_str(&std::fs::read_to_string(input)?)?;
            lp.validate()?;
            let sol = if lp.constraints() == 1 {
                solve_support2(&lp)?
            } else {
                solve_support_m1(&lp)?
            };
            emit(&serde_json::to_string_pretty(&sol)?)?;
        }
        Command::Eluder { class, eps } => {
            let class = FunctionClass::load(class)?;
            let actions: Vec<usize> = (0..class.actions()).collect();
            let dim = eluder_dimension(&class, &actions, eps)?;
            emit(&dim.to_string())?;
        }
    }
    Ok(())
}
