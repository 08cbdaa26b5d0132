//! `pairx`: explain, evaluate and probe image–text games from the command line.
//!
//! Every run-producing command writes a fresh directory holding its
//! artifacts and a `manifest.json` that echoes the resolved configuration
//! with sha256 hashes of inputs and outputs. Failures print one JSON object
//! on stderr and exit non-zero (see [`error::CliError::exit_code`]).

mod commands;
mod config;
mod error;
mod oracle;
mod run;
mod serve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{CheckArgs, EvaluateArgs, ExactArgs, ExplainArgs, ReplayArgs, ServeArgs, SynthArgs};
use error::{CliError, CliResult};
use run::{Manifest, RunConfig, MANIFEST_NAME};

#[derive(Parser)]
#[command(name = "pairx", version, about = "Second-order explanations of image-text similarity games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample masks, query the oracle and fit an explanation.
    Explain(ExplainArgs),
    /// Score an explanation: faithfulness correlation, insertion/deletion AID, pointing game.
    Evaluate(EvaluateArgs),
    /// Exact explanation by enumerating every mask (at most 24 players).
    Exact(ExactArgs),
    /// Generate a synthetic game file.
    Synth(SynthArgs),
    /// Check an oracle endpoint against the wire protocol.
    OracleCheck(CheckArgs),
    /// Serve a game file as an oracle, optionally with injected faults.
    Serve(ServeArgs),
    /// Rerun a recorded manifest and compare artifact hashes.
    Replay(ReplayArgs),
}

fn summary(manifest: &Manifest) -> serde_json::Value {
    json!({
        "out": manifest.config.out(),
        "manifest": manifest.config.out().join(MANIFEST_NAME),
        "artifacts": manifest.artifacts,
    })
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn execute(command: Command) -> CliResult<()> {
    let config = match command {
        Command::Explain(a) => RunConfig::Explain(a),
        Command::Evaluate(a) => RunConfig::Evaluate(a),
        Command::Exact(a) => RunConfig::Exact(a),
        Command::Synth(a) => RunConfig::Synth(a),
        Command::OracleCheck(a) => {
            let report = serve::oracle_check(a)?;
            print_json(&report);
            if !report.passed() {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                return Err(CliError::CheckFailed(format!("oracle checks failed: {}", failed.join(", "))));
            }
            return Ok(());
        }
        Command::Serve(a) => return serve::serve(a),
        Command::Replay(a) => {
            let recorded: Manifest = oracle::read_json(&a.manifest)?;
            let (fresh, comparison) = commands::replay(&recorded, a.out)?;
            let identical = comparison.iter().all(|c| c.identical);
            print_json(&json!({"run": summary(&fresh), "identical": identical, "artifacts": comparison}));
            if !identical {
                return Err(CliError::CheckFailed("replayed artifacts differ from the recorded run".into()));
            }
            return Ok(());
        }
    };
    let mut config = config;
    commands::resolve_paths(&mut config)?;
    let manifest = commands::run(config)?;
    print_json(&summary(&manifest));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
