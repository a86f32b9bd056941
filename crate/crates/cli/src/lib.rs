//! Command-line front end: dataset ingestion, training, evaluation and the
//! conformal, active-learning, entropy, ensemble and sweep experiments.
//!
//! Every command writes CSV reports and a `manifest.json` into its report
//! directory; `snefy rerun --manifest <file>` replays a run exactly.

pub mod args;
pub mod commands;
pub mod data;
pub mod error;
pub mod manifest;

use clap::Parser;

pub use args::Cli;
pub use commands::RunSummary;
pub use error::{CliError, CliResult};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "SNEFY_THREADS";

/// Parses and runs `argv` (without the program name).
pub fn run(argv: &[String]) -> CliResult<RunSummary> {
    let cli = Cli::try_parse_from(std::iter::once("snefy".to_string()).chain(argv.iter().cloned()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    commands::execute(&cli, argv)
}

/// Sizes the global worker pool from `SNEFY_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full entry point: returns the process exit code.
pub fn main_with(args: Vec<String>) -> i32 {
    let argv = &args[1.min(args.len())..];
    let parsed = Cli::try_parse_from(args.iter());
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = init_threads().and_then(|_| commands::execute(&cli, argv));
    match result {
        Ok(summary) => {
            println!("manifest: {}", summary.manifest.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
