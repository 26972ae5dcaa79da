//! Command-line front end: configuration, the six commands and their output
//! formats.

pub mod commands;
pub mod config;
pub mod format;

use std::io::Write;

use clap::Parser;

use commands::{run, RunError};
use config::{Command, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_FAIL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cocontact", version, about = "Time-dependent contact Hamiltonian mechanics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Run one parsed command line. The JSON report goes to `stdout`, messages
/// to `stderr`, CSV to `--out`. Returns the process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (name, flags) = cli.command.split();
    let cfg = match RunConfig::resolve(name, flags) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "configuration error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Runtime(_) => EXIT_RUNTIME,
            };
        }
    };
    if let (Some(path), Some(csv)) = (&cfg.out, &outcome.csv) {
        if let Err(e) = std::fs::write(path, csv) {
            let _ = writeln!(stderr, "runtime error: cannot write {}: {e}", path.display());
            return EXIT_RUNTIME;
        }
    }
    let text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
    if writeln!(stdout, "{text}").is_err() {
        return EXIT_RUNTIME;
    }
    match outcome.verdict {
        Some(false) => EXIT_FAIL,
        _ => EXIT_PASS,
    }
}
