//! Command-line front end for `bff-core`: flag and config handling, CSV
//! ingestion, parallel grid evaluation and the `curve.csv` / `summary.json`
//! outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod summary;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use args::{Cli, Command};
use commands::Outputs;
use error::{CliError, CliResult};

/// Thread pool capped by `BFF_THREADS` when set.
fn pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BFF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::input(format!("BFF_THREADS must be a positive integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Numerical(format!("cannot start worker threads: {e}")))
}

/// Runs a parsed command and returns what it would write, without touching the file system.
pub fn compute(cmd: &Command) -> CliResult<Outputs> {
    pool()?.install(|| match cmd {
        Command::Normal(a) => commands::normal(a),
        Command::Binomial(a) => commands::binomial(a),
        Command::Meta(a) => commands::meta(a),
        Command::Replication(a) => commands::replication(a),
        Command::Glm(a) => commands::glm(a),
        Command::Simulate(a) => commands::simulate(a),
    })
}

/// Runs a command and writes its files; returns their paths.
pub fn run(cmd: &Command) -> CliResult<Vec<PathBuf>> {
    let o = compute(cmd)?;
    std::fs::create_dir_all(&o.out).map_err(|e| CliError::input(format!("cannot create {}: {e}", o.out.display())))?;
    let mut written = Vec::new();
    for (name, bytes) in &o.files {
        let path = o.out.join(name);
        io::write_atomic(&path, bytes)?;
        written.push(path);
    }
    // the report is informational; a closed stdout (e.g. `| head`) is not an error
    let mut w = std::io::stdout().lock();
    if let Some(s) = &o.summary {
        let _ = writeln!(w, "{}", s.descriptor);
        let _ = match &s.mee {
            summary::MeeSummary::Found { display, .. } => {
                writeln!(w, "MEE {display}  k_ME {}", s.k_me.map_or("NA".into(), |k| format!("{k:.4}")))
            }
            summary::MeeSummary::NonExistent { .. } => writeln!(w, "MEE non-existent (maximum at the search boundary)"),
        };
        for set in &s.support_sets {
            let label = set.label.as_deref().map(|l| format!("  ({l})")).unwrap_or_default();
            let _ = writeln!(w, "k={}: {}{label}", set.k, set.display);
        }
        for warn in &s.warnings {
            let _ = writeln!(w, "warning: {}", warn.message);
        }
    }
    for p in &written {
        let _ = writeln!(w, "wrote {}", p.display());
    }
    Ok(written)
}

/// Entry point; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{}", CliError::input(first.trim_start_matches("error: ")).to_line());
            return 2;
        }
    };
    match run(&cli.command) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
