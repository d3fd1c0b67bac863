use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ma_cli::bench::cmd_bench;
use ma_cli::config::parse_config;
use ma_cli::solve::cmd_solve;
use ma_cli::verify::{run_checks, VerifyLevel};
use ma_cli::{CliError, EXIT_CONFIG_ERROR, EXIT_SOLVER_FAILURE, EXIT_VERIFY_FAILURE};
use ma_core::problems::BuiltinProblem;

/// Least-squares solver for the Dirichlet Monge-Ampere problem on the
/// unit disk.
#[derive(Parser)]
#[command(name = "ma", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured minimization and write report, trace, and
    /// field exports.
    Solve {
        /// Path to a flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Reproduce a benchmark table (h in {1/32, 1/64, 1/128} by
    /// g0 in {0.1, 0.2, 0.3}) as CSV.
    Bench {
        /// Which benchmark problem: 1, 2, or 3.
        #[arg(long)]
        table: u8,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the numerical self-checks.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Fast)]
        level: LevelArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

fn run() -> Result<(), i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config } => {
            let text = fs::read_to_string(&config).map_err(|e| {
                eprintln!("error: cannot read config {}: {e}", config.display());
                EXIT_CONFIG_ERROR
            })?;
            let run_config = parse_config(&text).map_err(|e| {
                eprintln!("error: {e}");
                e.exit_code()
            })?;
            let outcome = cmd_solve(&run_config).map_err(|e| {
                eprintln!("error: {e}");
                e.exit_code()
            })?;
            println!(
                "termination: {:?} after {} iterations, J = {:e}",
                outcome.termination, outcome.iterations, outcome.final_j
            );
            if let Some(err) = outcome.l2_error {
                println!("l2 error vs exact solution: {err:e}");
            }
            println!("artifacts written to {}", outcome.out_dir.display());
            if outcome.termination.is_converged() {
                Ok(())
            } else {
                Err(EXIT_SOLVER_FAILURE)
            }
        }
        Command::Bench { table, out } => {
            let problem = match table {
                1 => BuiltinProblem::Test1,
                2 => BuiltinProblem::Test2,
                3 => BuiltinProblem::Test3,
                other => {
                    eprintln!("error: --table must be 1, 2, or 3 (got {other})");
                    return Err(EXIT_CONFIG_ERROR);
                }
            };
            let csv = cmd_bench(problem).map_err(|e: CliError| {
                eprintln!("error: {e}");
                e.exit_code()
            })?;
            fs::write(&out, &csv).map_err(|e| {
                eprintln!("error: cannot write {}: {e}", out.display());
                EXIT_SOLVER_FAILURE
            })?;
            print!("{csv}");
            println!("# written to {}", out.display());
            Ok(())
        }
        Command::Verify { level } => {
            let level = match level {
                LevelArg::Fast => VerifyLevel::Fast,
                LevelArg::Full => VerifyLevel::Full,
            };
            let results = run_checks(level);
            let mut all_pass = true;
            for check in &results {
                println!(
                    "[{}] {}: measured {:e}, required <= {:e}",
                    if check.pass { "ok" } else { "FAIL" },
                    check.name,
                    check.measured,
                    check.required
                );
                all_pass &= check.pass;
            }
            if all_pass {
                println!("all {} checks passed", results.len());
                Ok(())
            } else {
                Err(EXIT_VERIFY_FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code as u8),
    }
}
