use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jdcalc_core::experiment::{self, ExperimentConfig, Suite};
use jdcalc_core::fields::catalog;
use jdcalc_core::mollifier::TEST_FUNCTIONS;

/// Verification suites for the Itô–Wentzell formula with jumps.
#[derive(Parser)]
#[command(name = "jdcalc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite described by a `key = value` config file.
    Run { config: PathBuf },
    /// List preset names usable as `preset = ...`.
    ListPresets,
    /// List suite names usable as `suite = ...`.
    ListSuites,
}

fn run(path: &Path) -> i32 {
    let config = match ExperimentConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("jdcalc: {e}");
            return 2;
        }
    };
    let result = experiment::run(&config);
    match &result {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{:<4} {} = {:.6e} {} {:.6e}",
                    if c.pass { "ok" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.relation,
                    c.threshold
                );
            }
            println!(
                "{} {}: {} ({} rows, {:.2}s) -> {}",
                report.suite,
                report.preset,
                report.verdict(),
                report.rows.len(),
                report.wall_time.as_secs_f64(),
                config.output_dir.display()
            );
        }
        Err(e) => eprintln!("jdcalc: {e}"),
    }
    experiment::exit_code(&result)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => run(&config),
        Command::ListPresets => {
            for p in catalog() {
                let kernel = if p.kernel.is_some() { " [kernel]" } else { "" };
                println!("{:<20} {}{kernel}", p.name, p.summary);
            }
            for t in TEST_FUNCTIONS {
                println!(
                    "{:<20} mollifier test function, L = {}, exponent {}",
                    t.name, t.lipschitz, t.holder
                );
            }
            0
        }
        Command::ListSuites => {
            for s in Suite::ALL {
                println!("{:<16} {}", s.name(), s.description());
            }
            0
        }
    };
    ExitCode::from(code as u8)
}
