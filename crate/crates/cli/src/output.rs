use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

/// Where results go: `--out` or stdout, in the chosen format.
pub struct Sink {
    out: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(out: Option<PathBuf>, format: Format) -> Self {
        Self { out, format }
    }

    /// A table plus its summary. As CSV the table is the main output and the
    /// summary goes to `<out>.report.json` (stderr without `--out`); as JSON
    /// both share one document with the table under `key`.
    pub fn table<R: Serialize, T: Serialize>(&self, report: &R, key: &str, rows: &[T]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = self.open(self.out.as_deref())?;
                write_csv(&mut w, rows)?;
                w.flush()?;
                match &self.out {
                    Some(path) => {
                        let side = path.with_extension("report.json");
                        let mut w = self.open(Some(&side))?;
                        write_json(&mut w, report)?;
                        w.flush()?;
                    }
                    None => write_json(&mut io::stderr().lock(), report)?,
                }
            }
            Format::Json => {
                let mut doc = serde_json::to_value(report)?;
                if let Value::Object(map) = &mut doc {
                    map.insert(key.to_string(), serde_json::to_value(rows)?);
                }
                let mut w = self.open(self.out.as_deref())?;
                write_json(&mut w, &doc)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    /// A report with no table; always JSON.
    pub fn report<R: Serialize>(&self, report: &R) -> Result<()> {
        let mut w = self.open(self.out.as_deref())?;
        write_json(&mut w, report)?;
        w.flush()?;
        Ok(())
    }

    fn open(&self, path: Option<&Path>) -> Result<Box<dyn Write>> {
        Ok(match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn write_csv<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}
