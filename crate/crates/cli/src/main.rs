use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qepi::runner::{check_catalog, run, RunError, RunOptions, MAX_CUTOFF_ENV};

/// Numerical verification of entropy power and Fisher information
/// inequalities for bosonic convolutions.
#[derive(Parser)]
#[command(name = "qepi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a configuration file and write CSV and JSON reports.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the reports (default: current directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the available check kinds.
    ListChecks,
}

fn max_cutoff() -> Result<Option<usize>, RunError> {
    match std::env::var(MAX_CUTOFF_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| RunError::ConfigInvalid(format!("{MAX_CUTOFF_ENV}={v} is not a cutoff"))),
        Err(_) => Ok(None),
    }
}

fn verify(config: PathBuf, out_dir: Option<PathBuf>, jobs: Option<usize>, seed: Option<u64>) -> Result<i32, RunError> {
    let opts = RunOptions { config, out_dir, jobs, seed, max_cutoff: max_cutoff()? };
    let out = run(&opts)?;
    let s = out.report.summary;
    println!(
        "{} rows: {} passed, {} failed ({} diagnostic), {} skipped",
        s.total, s.passed, s.failed, s.diagnostic, s.skipped
    );
    for r in out.report.records.iter().filter(|r| !r.pass) {
        let why = r.error.as_deref().unwrap_or("");
        println!("  {:?} {} {} {} margin={:e} {why}", r.status, r.check, r.family, r.params, r.margin);
    }
    println!("wrote {} and {}", out.json_path.display(), out.csv_path.display());
    Ok(out.report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::ListChecks => {
            for (kind, text) in check_catalog() {
                println!("{:<13} {text}", kind.name());
            }
            println!("{:<13} every check above", "all");
            0
        }
        Command::Verify { config, out_dir, jobs, seed } => verify(config, out_dir, jobs, seed).unwrap_or_else(|e| {
            eprintln!("qepi: {e}");
            e.exit_code()
        }),
    };
    ExitCode::from(code as u8)
}
