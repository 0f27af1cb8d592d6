//! `tzoom`: query-guided temporal search from the command line.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonFlags;

#[derive(Debug, Parser)]
#[command(
    name = "tzoom",
    version,
    about = "Query-guided temporal zoom-in over long videos"
)]
struct Cli {
    #[command(flatten)]
    common: CommonFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search one video for one query and print the winning windows.
    Search(commands::SearchArgs),
    /// Run a whole annotation corpus and report grounding / QA metrics.
    Eval(commands::EvalArgs),
    /// Sweep epsilon and delta over synthetic oracle videos; emits CSV.
    Simulate(commands::SimulateArgs),
    /// Bin reflection confidences against outcomes; emits CSV.
    Calibrate(commands::CalibrateArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = config::RunConfig::resolve(&cli.common).and_then(|cfg| match &cli.command {
        Command::Search(a) => commands::search(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
        Command::Simulate(a) => commands::simulate(&cfg, a),
        Command::Calibrate(a) => commands::calibrate(&cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
