use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use contavg_cli::config::ExperimentConfig;
use contavg_cli::experiments::run_experiment;
use contavg_cli::report::render_report;

/// Continuous-averaging experiment runner.
#[derive(Parser)]
#[command(name = "contavg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config; exit 1 on assertion failure.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Validate a JSON config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-emit a result CSV as csv or a markdown table.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match ExperimentConfig::from_path(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match run_experiment(&cfg) {
                Ok(outcome) => {
                    for line in &outcome.lines {
                        println!("{line}");
                    }
                    for f in &outcome.files {
                        println!("     wrote {}", f.display());
                    }
                    if outcome.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => match ExperimentConfig::from_path(&config) {
            Ok(_) => {
                println!("config ok");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Report {
            input,
            format,
            output,
        } => match render_report(&input, &format, output.as_ref()) {
            Ok(rendered) => {
                if output.is_none() {
                    print!("{rendered}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("report failed: {e}");
                ExitCode::from(2)
            }
        },
    }
}
