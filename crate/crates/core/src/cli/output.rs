//! Output helpers: JSON envelopes and CSV sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::verify::suite::FORMAT_VERSION;

/// Writer for `path`, or stdout when absent.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// JSON summary carrying the format version and the full effective config.
pub fn write_summary<C: Serialize, R: Serialize>(
    path: Option<&Path>,
    command: &str,
    config: &C,
    results: &R,
) -> Result<()> {
    let doc = json!({
        "format_version": FORMAT_VERSION,
        "command": command,
        "config": config,
        "results": results,
    });
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn csv_writer(path: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path)?))
}
