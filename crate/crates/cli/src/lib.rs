//! Command-line front end: argument parsing, commands and table output.

pub mod args;
pub mod commands;
pub mod table;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Format};
use commands::{Failure, Outcome, EXIT_FLAGGED, EXIT_USAGE};

const SEED_ENV: &str = "CONDANA_SEED";

fn seed(cli: &Cli) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Failure::usage(format!("{SEED_ENV}=`{v}`: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(cli.seed),
        Err(e) => Err(Failure::usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), Failure> {
    let io_failure = |e: io::Error| Failure::usage(format!("writing output: {e}"));
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                Failure::usage(format!("{}: {e}", path.display()))
            })?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Csv => outcome.table.write_csv(&mut sink),
        Format::Json => outcome.table.write_json(&mut sink),
    }
    .map_err(io_failure)?;
    sink.flush().map_err(io_failure)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::usage(format!("--threads: {e}")))?
            .install(|| run_in_pool(cli)),
        None => run_in_pool(cli),
    }
}

fn run_in_pool(cli: &Cli) -> Result<u8, Failure> {
    if cli.samples < condana::condition::MIN_SAMPLES {
        return Err(Failure::usage(format!(
            "--samples must be at least {}",
            condana::condition::MIN_SAMPLES
        )));
    }
    let seed = seed(cli)?;
    let outcome = match cli.command {
        Command::Analyze => commands::analyze(cli, seed),
        Command::Verify => commands::verify(cli, seed),
        Command::Sweep => commands::sweep(cli, seed),
        Command::Moments => commands::moments(cli),
    }?;
    emit(cli, &outcome)?;
    if let Some(s) = &outcome.summary {
        eprintln!("{s}");
    }
    Ok(if outcome.flagged { EXIT_FLAGGED } else { 0 })
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, S>(args: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("condana: {f}");
            f.code
        }
    }
}
