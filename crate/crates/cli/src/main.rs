mod args;
mod commands;
mod input;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use carson_core::catalog::{load_catalog, Catalog};
use carson_core::inverse::{SolverOptions, StudyOptions};
use clap::Parser;

use args::{Cli, Command, Format};
use commands::Context;

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Forward(_) => "forward",
        Command::Recover(_) => "recover",
        Command::Bounds(_) => "bounds",
        Command::Slack(_) => "slack",
        Command::Sweep(_) => "sweep",
        Command::Validate(_) => "validate",
    }
}

fn run(cli: &Cli) -> Result<()> {
    let catalog = match &cli.catalog {
        Some(p) => load_catalog(p).with_context(|| format!("catalog {}", p.display()))?,
        None => Catalog::bundled(),
    };
    let ctx = Context {
        catalog,
        study: StudyOptions {
            solver: SolverOptions {
                starts: cli.starts as usize,
                seed: cli.seed,
                ..SolverOptions::default()
            },
            workers: cli.workers,
            ..StudyOptions::default()
        },
    };
    let seed = cli.seed;
    let report = match &cli.command {
        Command::Forward(a) => commands::forward(&ctx, a, seed)?,
        Command::Recover(a) => commands::recover(&ctx, a, seed)?,
        Command::Bounds(a) => commands::bounds(&ctx, a, seed)?,
        Command::Slack(a) => commands::slack(&ctx, a, seed)?,
        Command::Sweep(a) => commands::sweep(&ctx, a, seed)?,
        Command::Validate(a) => commands::validate(&ctx, a, seed)?,
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    match cli.format {
        Format::Json => report.write_json(&mut out)?,
        Format::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carson {}: {e:#}", command_name(&cli.command));
            ExitCode::FAILURE
        }
    }
}
