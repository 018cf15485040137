use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use relind_cli::commands::write_outputs;
use relind_cli::{run, Command, Format, Invocation};

/// Exact finite-window experiments for relative entropy and relative mean
/// dimension of sliding block codes.
///
/// Exit codes: 0 success, 1 named mathematical failure, 2 configuration
/// error, 3 budget exceeded.
#[derive(Debug, Parser)]
#[command(name = "relind", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file (see CONFIG.md).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized searches; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Operation budget; overrides the config.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Output path; stdout when absent. CSV side-tables go next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Fiberwise separated-set table for relative entropy.
    Entropy,
    /// Mean dimension lower-bound certificates.
    MdimLower,
    /// The lemma battery.
    VerifyLemmas,
    /// Wasserstein distance, transport plan and dual potential.
    Transport,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let inv = Invocation {
        command: match cli.command {
            Cmd::Entropy => Command::Entropy,
            Cmd::MdimLower => Command::MdimLower,
            Cmd::VerifyLemmas => Command::VerifyLemmas,
            Cmd::Transport => Command::Transport,
        },
        config: cli.config,
        seed: cli.seed,
        budget: cli.budget,
        out: cli.out,
        format: match cli.format {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        },
    };
    let outcome = match run(&inv) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("relind: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for w in &outcome.report.warnings {
        eprintln!("relind: warning: {w}");
    }
    for b in &outcome.report.results {
        if let Some(e) = &b.error {
            eprintln!("relind: {}: {} ({})", b.name, e.message, e.kind);
        }
    }
    if let Err(e) = write_outputs(&outcome, inv.out.as_deref(), inv.format) {
        eprintln!("relind: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    ExitCode::from(outcome.report.exit_code() as u8)
}
