use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plbvp_cli::problem::catalog_listing;
use plbvp_cli::run::EXIT_FAILURE;
use plbvp_cli::{parse_config_with_overrides, run_solve, run_study, run_verify, CliError, Outcome, RunOptions};

#[derive(Parser)]
#[command(name = "plbvp", version, about = "Solve and check vector p-Laplacian boundary value inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the continuation solve and write the solution table and report.
    Solve(RunArgs),
    /// Check the hypotheses of the problem without solving.
    Verify(RunArgs),
    /// Grid refinement study against the configured reference solution.
    Study(RunArgs),
    /// List the built-in catalog problems and their parameters.
    Catalog,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Directory for relative output paths.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    #[arg(long)]
    quiet: bool,
    /// Seed for the sampled hypothesis checks (same as `--override solver.seed=<n>`).
    #[arg(long)]
    seed: Option<u64>,
    /// `section.key=value`, applied after reading the file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

type Runner = fn(&plbvp_cli::RunConfig, &RunOptions) -> Result<Outcome, CliError>;

fn execute(args: RunArgs, runner: Runner) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut overrides = args.overrides;
    if let Some(seed) = args.seed {
        overrides.push(format!("solver.seed={seed}"));
    }
    let cfg = parse_config_with_overrides(&text, &overrides)?;
    runner(
        &cfg,
        &RunOptions {
            output_dir: args.output_dir,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, runner): (RunArgs, Runner) = match cli.command {
        Command::Catalog => {
            print!("{}", catalog_listing());
            return ExitCode::SUCCESS;
        }
        Command::Solve(a) => (a, run_solve),
        Command::Verify(a) => (a, run_verify),
        Command::Study(a) => (a, run_study),
    };
    let quiet = args.quiet;
    let config = args.config.display().to_string();
    match execute(args, runner) {
        Ok(outcome) => {
            if !quiet {
                print!("{}", outcome.summary);
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            } else if outcome.code != 0 {
                eprint!("{}", outcome.summary);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {config}: {e}");
            ExitCode::from(EXIT_FAILURE as u8)
        }
    }
}
