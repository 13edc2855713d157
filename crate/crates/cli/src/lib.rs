//! Command-line front end: argument and config handling, output encoding,
//! subcommands and the default certification suite.

pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::commands::{execute, CliError};
use crate::config::{parse_config, Cli, Settings};
use crate::output::{emit, write_atomic};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "ALMOSTIID_THREADS";

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    // A pool that already exists (repeated calls in one process) is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parse `args` (program name first), run the command and return the exit
/// code: 0 all certifications pass, 1 a certification failed, 2 usage or
/// input error, 3 solver nonconvergence.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let file = match &cli.config {
        None => None,
        Some(path) => match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| parse_config(&t))
        {
            Ok(f) => Some(f),
            Err(msg) => {
                eprintln!("error: config {}: {msg}", path.display());
                return EXIT_USAGE;
            }
        },
    };
    let settings = Settings::resolve(cli, file);
    let outcome = match execute(&settings) {
        Ok(o) => o,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            return match e {
                almost_iid::Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
                _ => EXIT_USAGE,
            };
        }
    };
    if let Err(e) = emit(&settings, &outcome.body) {
        eprintln!("error: writing output: {e}");
        return EXIT_USAGE;
    }
    if let Some(out) = &settings.out {
        for (suffix, body) in &outcome.sidecars {
            let mut p = out.clone().into_os_string();
            p.push(suffix);
            if let Err(e) = write_atomic(&PathBuf::from(p), body) {
                eprintln!("error: writing sidecar: {e}");
                return EXIT_USAGE;
            }
        }
    }
    if outcome.stale {
        EXIT_NONCONVERGENCE
    } else if outcome.failed {
        EXIT_CERT_FAILURE
    } else {
        EXIT_OK
    }
}
