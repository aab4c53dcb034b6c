use std::path::PathBuf;
use std::process::ExitCode;

use bjlab::harness::{parse_config, run, HarnessError, Mode};
use clap::Parser;

/// Seeded experiments on Birkhoff-James orthogonality in discretized Bochner spaces.
///
/// Prints a JSON summary on stdout. Exit status: 0 when every trial matched
/// its prediction, 2 on any unexplained failure, 1 on a configuration or I/O error.
/// The environment variable BJLAB_THREADS caps the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "bjlab", version)]
struct Cli {
    /// check-ortho | check-approx | sip | axioms | preserver-sweep | isometry-test
    mode: String,

    /// TOML experiment description.
    #[arg(long)]
    config: PathBuf,

    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,

    /// CSV output path; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var("BJLAB_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| HarnessError::Config {
                field: "BJLAB_THREADS".into(),
                message: format!("{v:?} is not a thread count"),
            }),
        Err(_) => Ok(None),
    }
}

fn main_inner(cli: Cli) -> Result<i32, HarnessError> {
    let mode: Mode = cli.mode.parse()?;
    let text = std::fs::read_to_string(&cli.config)?;
    let mut config = parse_config(&text, Some(mode))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.out.is_some() {
        config.output = cli.out;
    }
    let report = run(&config, threads_from_env()?)?;
    println!("{}", report.summary_json());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bjlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
