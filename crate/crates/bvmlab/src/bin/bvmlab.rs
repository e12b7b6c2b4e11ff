//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 2 config error, 3 acceptance-threshold breach under
//! `--check`, 1 anything else. Worker count comes from `BVMLAB_WORKERS`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use bvmlab::harness::{self, ExperimentConfig, RateQuantity};

#[derive(Parser)]
#[command(
    name = "bvmlab",
    version,
    about = "White-noise credible-set experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write the JSON/CSV report.
    Run {
        config: PathBuf,
        /// Evaluate the config's acceptance windows; breaches exit with 3.
        #[arg(long)]
        check: bool,
    },
    /// Parse and validate a config, printing every issue with its field path.
    Validate { config: PathBuf },
    /// Fit the log-log rate slope of a report quantity.
    Rates {
        report: PathBuf,
        #[arg(long, default_value = "l2risk")]
        quantity: String,
    },
    /// Re-emit a stored report as pretty JSON or an aggregate CSV table.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

fn init_workers() {
    if let Ok(value) = std::env::var("BVMLAB_WORKERS") {
        if let Ok(workers) = value.parse::<usize>() {
            if workers >= 1 {
                // ignore the error if a pool already exists (tests, reruns)
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build_global();
            }
        }
    }
}

fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ExitCode> {
    match ExperimentConfig::from_path(path) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(EXIT_CONFIG))
        }
    }
}

fn print_issues(config: &ExperimentConfig) -> bool {
    let issues = config.validate();
    let mut has_error = false;
    for issue in &issues {
        let tag = if issue.warning { "warning" } else { "error" };
        eprintln!("{tag}: {}: {}", issue.path, issue.message);
        has_error |= !issue.warning;
    }
    has_error
}

fn cmd_run(path: PathBuf, check: bool) -> ExitCode {
    let config = match load_config(&path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if print_issues(&config) {
        return ExitCode::from(EXIT_CONFIG);
    }
    if config.replications == 0 {
        eprintln!("warning: replications = 0, writing an empty report");
    }
    let start = Instant::now();
    let output = match harness::run(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let elapsed = start.elapsed();
    match harness::write_outputs(&output.report, &output.records, &config.output) {
        Ok((json_path, csv_path)) => {
            eprintln!(
                "wrote {} and {} in {:.1}s",
                json_path.display(),
                csv_path.display(),
                elapsed.as_secs_f64()
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    for cell in &output.report.cells {
        if cell.aborted {
            eprintln!(
                "error: cell n = {} aborted with {} replication failures",
                cell.n,
                cell.failures.len()
            );
        }
        for set in &cell.sets {
            eprintln!(
                "cell n = {:>7}: {:?} coverage {:.3} +- {:.3}, R_n median {:.3}",
                cell.n, set.kind, set.coverage, set.coverage_se, set.rn_median
            );
        }
    }
    if output.report.cells.iter().any(|c| c.aborted) {
        return ExitCode::FAILURE;
    }
    if check {
        let breaches = harness::evaluate_checks(&output.report);
        if !breaches.is_empty() {
            for b in &breaches {
                eprintln!(
                    "check breach: cell n = {} {:?} = {:?} outside [{:?}, {:?}]",
                    b.n, b.check.metric, b.value, b.check.min, b.check.max
                );
            }
            return ExitCode::from(EXIT_CHECK);
        }
        eprintln!("all checks passed");
    }
    ExitCode::SUCCESS
}

fn cmd_validate(path: PathBuf) -> ExitCode {
    let config = match load_config(&path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if print_issues(&config) {
        return ExitCode::from(EXIT_CONFIG);
    }
    println!("OK");
    ExitCode::SUCCESS
}

fn cmd_rates(path: PathBuf, quantity: String) -> ExitCode {
    let report = match harness::load_report(&path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let quantity: RateQuantity = match quantity.parse() {
        Ok(q) => q,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match harness::rate_fit(&report, quantity) {
        Ok((slope, stderr)) => {
            println!("slope = {slope:.6} +- {stderr:.6}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_report(path: PathBuf, format: String) -> ExitCode {
    let report = match harness::load_report(&path) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match format.as_str() {
        "json" => match bvmlab::harness::report::report_json(&report) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        "csv" => match bvmlab::harness::report::aggregates_csv(&report) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        other => {
            eprintln!("error: unknown format `{other}` (expected json or csv)");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn main() -> ExitCode {
    init_workers();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, check } => cmd_run(config, check),
        Command::Validate { config } => cmd_validate(config),
        Command::Rates { report, quantity } => cmd_rates(report, quantity),
        Command::Report { report, format } => cmd_report(report, format),
    }
}
