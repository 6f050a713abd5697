//! Command-line front end for the `meanforce` library.
//!
//! Exit codes: 0 success, 1 computation or I/O error, 3 when a validity
//! margin reached the invalid threshold (outputs are still written),
//! 64 usage error, 65 configuration error.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use args::{Cli, Command};
use config::{resolve, Defaults};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INVALID_MARGIN: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_CONFIG: i32 = 65;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] meanforce::Error),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Compute(_) | CliError::Io(_) => EXIT_ERROR,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MEANFORCE_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "MEANFORCE_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    // a pool built earlier in the same process stays in place
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn dispatch(
    cli: Cli,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<commands::Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Weak(c) => {
            commands::weak(&resolve(&c, None, None, &Defaults::default())?, out, err)
        }
        Command::Ultrastrong(c) => commands::ultrastrong(
            &resolve(&c, None, None, &Defaults::default())?,
            false,
            out,
            err,
        ),
        Command::Ultrastrong2(c) => commands::ultrastrong(
            &resolve(&c, None, None, &Defaults::default())?,
            true,
            out,
            err,
        ),
        Command::Models(c) => {
            commands::models(&resolve(&c, None, None, &Defaults::default())?, out, err)
        }
        Command::Oracle(a) => commands::oracle(
            &resolve(&a.common, Some(&a), None, &Defaults::default())?,
            out,
            err,
        ),
        Command::Sweep(a) => commands::sweep(
            &resolve(&a.common, None, Some(&a), &Defaults::default())?,
            out,
            err,
        ),
        Command::Fig1(a) => {
            let defaults = Defaults {
                model: Some(meanforce::models::ModelSpec::VSystem {
                    omega_q: commands::FIG1_OMEGA_Q,
                    delta: commands::FIG1_DELTA,
                }),
                lambda: Some(commands::FIG1_LAMBDA),
                grid: Some(commands::fig1_default_grid()),
            };
            commands::fig1(&resolve(&a.common, None, Some(&a), &defaults)?, out, err)
        }
    }
}

/// Runs the CLI with explicit output streams and returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(o) if o.invalid_margin => {
            let _ = writeln!(
                err,
                "warning: a validity margin reached the invalid threshold"
            );
            EXIT_INVALID_MARGIN
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
