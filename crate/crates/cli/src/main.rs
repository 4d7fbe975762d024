use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hamflow_cli::{model_catalog, parse_scenario, run, Mode, EXIT_IO, EXIT_VALIDATION};

#[derive(Parser)]
#[command(name = "hamflow", version, about = "Extended phase-space Hamiltonian dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a canonical4d, gauge4d or reference3d scenario.
    Simulate { scenario: PathBuf },
    /// Run a compare scenario (4D flow against the 3D reference).
    Compare { scenario: PathBuf },
    /// Run a quantum wave-packet scenario.
    Quantum { scenario: PathBuf },
    /// List built-in models.
    ListModels,
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, allowed): (PathBuf, &[Mode]) = match cli.command {
        Command::ListModels => {
            for (name, desc) in model_catalog() {
                println!("{name:<18} {desc}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Simulate { scenario } => (scenario, &[Mode::Canonical4d, Mode::Gauge4d, Mode::Reference3d]),
        Command::Compare { scenario } => (scenario, &[Mode::Compare]),
        Command::Quantum { scenario } => (scenario, &[Mode::Quantum]),
    };

    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return exit(EXIT_IO);
        }
    };
    let scenario = match parse_scenario(&bytes) {
        Ok(s) => s,
        Err(e) => {
            for msg in e.messages() {
                eprintln!("error: {}: {msg}", path.display());
            }
            return exit(EXIT_VALIDATION);
        }
    };
    if !allowed.contains(&scenario.mode) {
        let names: Vec<_> = allowed.iter().map(|m| m.as_str()).collect();
        eprintln!(
            "error: {}: mode `{}` cannot be run by this subcommand (expected {})",
            path.display(),
            scenario.mode,
            names.join(", ")
        );
        return exit(EXIT_VALIDATION);
    }
    match run(&scenario) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code())
        }
    }
}
