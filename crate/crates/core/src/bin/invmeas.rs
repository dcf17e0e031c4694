use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use invmeas::cli::{error_json, exit_code, run, Command, Invocation};

#[derive(Parser)]
#[command(name = "invmeas", version, about = "Invariant measures of polynomial dynamical systems")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Moments file for `reconstruct`.
    #[arg(long, global = true)]
    moments: Option<PathBuf>,
    /// Debug logging on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Assemble and solve the relaxation; writes moments.json.
    Solve,
    /// Estimate moments along a trajectory; writes empirical_moments.json.
    Simulate,
    /// Density and Christoffel support from a moments file.
    Reconstruct,
    /// Write the assembled program as program.txt.
    DumpProgram,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let Some(config) = args.config else {
        eprintln!(r#"{{"error":{{"kind":"config","key":"--config","message":"--config is required","exit_code":2}}}}"#);
        return ExitCode::from(2);
    };
    let inv = Invocation {
        command: match args.command {
            Cmd::Solve => Command::Solve,
            Cmd::Simulate => Command::Simulate,
            Cmd::Reconstruct => Command::Reconstruct,
            Cmd::DumpProgram => Command::DumpProgram,
        },
        config,
        out: args.out,
        moments: args.moments,
    };
    match run(&inv) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
