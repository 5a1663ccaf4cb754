//! CSV and JSON emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use carleson_core::multipliers::fmt_f64 as float;

use crate::error::CliError;

/// CSV file with a fixed header; every row must match its width.
pub struct Csv {
    w: BufWriter<File>,
    width: usize,
}

impl Csv {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, CliError> {
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        writeln!(w, "{}", header.join(","))?;
        Ok(Self { w, width: header.len() })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), CliError> {
        debug_assert_eq!(cells.len(), self.width);
        writeln!(self.w, "{}", cells.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn write_json<S: serde::Serialize>(dir: &Path, name: &str, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}
