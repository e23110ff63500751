use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use degen_cli::{run, version::version_line, Command, EXIT_AUDIT_FAILURE, EXIT_ERROR, EXIT_OK};

#[derive(Parser)]
#[command(name = "degen-sys", about = "Coupled degenerate elliptic solver and estimate auditor")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// One coupled solve.
    Solve(RunArgs),
    /// The approximation ladder in n with per-rung audits.
    Ladder(RunArgs),
    /// Ladder plus equiintegrability and flux-convergence diagnostics.
    Audit(RunArgs),
    /// Manufactured-solution convergence study.
    Mms(RunArgs),
    /// Print the version and convention fingerprint.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Version => {
            println!("{}", version_line());
            return ExitCode::from(EXIT_OK);
        }
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Ladder(a) => (Command::Ladder, a),
        Cmd::Audit(a) => (Command::Audit, a),
        Cmd::Mms(a) => (Command::Mms, a),
    };
    match run(command, &args.config, args.out.as_deref()) {
        Ok(outcome) if outcome.all_passed() => {
            println!("ok: {} audits passed", outcome.audits.len());
            ExitCode::from(EXIT_OK)
        }
        Ok(outcome) => {
            for a in outcome.failures() {
                eprintln!("audit failed: {a}");
            }
            ExitCode::from(EXIT_AUDIT_FAILURE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
