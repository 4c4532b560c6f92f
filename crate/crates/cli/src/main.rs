use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use orlicz_obstacle_cli::config::Check;
use orlicz_obstacle_cli::experiment::{self, EXIT_ERROR};
use orlicz_obstacle_cli::{ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(
    name = "orlicz-obstacle",
    version,
    about = "Obstacle problems under generalized Orlicz growth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and run the checks listed in the config.
    Run(Common),
    /// Check the structural conditions of the configured phi on the domain.
    VerifyConditions(Common),
    /// Compute the configured relative capacity or boundary-point fatness.
    Capacity(Common),
    /// Solve and run the given checks instead of the configured ones.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: interior-k, interior-mean, boundary, gehring,
        /// continuity, or all.
        #[arg(long, value_parser = parse_checks)]
        checks: CheckList,
    },
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random solver starts; overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Divide the configured h by this factor.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    grid_scale: Option<u32>,
}

#[derive(Clone)]
struct CheckList(Vec<Check>);

fn parse_checks(s: &str) -> Result<CheckList, String> {
    Check::parse_list(s).map(CheckList)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as non-conclusive.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let (common, checks, op): (_, _, fn(ExperimentConfig, &RunOptions) -> _) = match cli.command {
        Command::Run(c) => (c, None, experiment::run),
        Command::VerifyConditions(c) => (c, None, experiment::verify_conditions),
        Command::Capacity(c) => (c, None, experiment::capacity),
        Command::Diagnose { common, checks } => (common, Some(checks.0), experiment::run),
    };
    let opts = RunOptions {
        out: common.out,
        seed: common.seed,
        grid_scale: common.grid_scale,
        checks,
    };
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| op(cfg, &opts));
    match result {
        Ok(outcome) => {
            // A closed stdout (e.g. piped into `head`) must not change the exit code.
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", outcome.summary);
            let _ = writeln!(stdout, "outputs written to {}", outcome.out_dir.display());
            ExitCode::from(outcome.status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            ExitCode::from(EXIT_ERROR)
        }
    }
}
