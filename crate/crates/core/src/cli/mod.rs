//! Batch experiment runner.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage,
//! configuration or argument errors.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub use args::Cli;
use args::Command;

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let table = match &cli.config {
        Some(path) => load_config(path)?,
        None => toml::Table::new(),
    };
    let section = table.get(cli.command.section()).cloned();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::KernelEval(a) => commands::kernel_eval(merge(a, section)?),
        Command::Walk(a) => commands::walk(merge(a, section)?),
        Command::Simulate(a) => commands::simulate(merge(a, section)?),
        Command::LimitSample(a) => commands::limit_sample(merge(a, section)?),
        Command::Verify(a) => commands::verify(merge(a, section)?),
        Command::Report(a) => commands::report(merge(a, section)?),
    })
}

fn load_config(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Overlays the flags on top of the config-file section.
fn merge<A: Serialize + DeserializeOwned>(flags: A, section: Option<toml::Value>) -> Result<A> {
    let Some(section) = section else {
        return Ok(flags);
    };
    let mut base = serde_json::to_value(section).map_err(|e| Error::Config(e.to_string()))?;
    // validate the section on its own so unknown keys are reported
    serde_json::from_value::<A>(base.clone()).map_err(|e| Error::Config(format!("config section: {e}")))?;
    let over = serde_json::to_value(flags)?;
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            if !v.is_null() {
                b.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))
}
