mod args;
mod commands;
mod output;

use std::fmt;
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{Cli, Command, Config, GlobalArgs, Merge};
use commands::Report;

pub const EXIT_USAGE: u8 = 2;

/// Invalid flags or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<zerocell::Error>() {
        Some(zerocell::Error::InvalidParams(_) | zerocell::Error::Domain { .. }) => EXIT_USAGE,
        Some(zerocell::Error::NoConvergence(_)) => commands::EXIT_NOT_CONVERGED as u8,
        _ => commands::EXIT_FAILURE as u8,
    }
}

fn merged<T>(flags: &T, cfg: Option<&Config>) -> anyhow::Result<T>
where
    T: Merge + serde::de::DeserializeOwned + serde::Serialize + Default + Clone,
{
    let mut out = flags.clone();
    if let Some(c) = cfg {
        out.merge(c.command::<T>()?);
    }
    Ok(out)
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("ZEROCELL_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| UsageError(format!("ZEROCELL_THREADS=`{s}` is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(UsageError(String::from("--threads must be positive")).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("starting the worker pool")?;
    }
    Ok(())
}

fn emit(report: &Report, global: &GlobalArgs) -> anyhow::Result<()> {
    if let Some(path) = &global.out {
        report.table.write_file(path)?;
    } else if !global.json {
        report.table.write_to(io::stdout().lock())?;
    }
    if global.json {
        let mut out = io::stdout().lock();
        serde_json::to_writer_pretty(&mut out, &report.json)?;
        writeln!(out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let cfg = cli.global.config.as_deref().map(Config::load).transpose()?;
    let mut global = cli.global.clone();
    if let Some(c) = &cfg {
        global.merge(c.global()?);
    }
    configure_threads(global.threads)?;
    let c = cfg.as_ref();
    let report = match &cli.command {
        Command::Moments(a) => commands::moments(&merged(a, c)?)?,
        Command::Variance(a) => commands::variance(&merged(a, c)?)?,
        Command::Sweep(a) => commands::sweep(&merged(a, c)?)?,
        Command::Simulate(a) => commands::simulate(&merged(a, c)?)?,
        Command::Asympt(a) => commands::asympt(&merged(a, c)?)?,
        Command::Calibrate(a) => commands::calibrate(&merged(a, c)?)?,
    };
    emit(&report, &global)?;
    Ok(report.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
