use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

/// Real number with 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Missing values are written as empty fields.
pub fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: PathBuf, header: &[&str]) -> CliResult<Self> {
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut out = CsvOut {
            writer: csv::Writer::from_writer(BufWriter::new(file)),
            path,
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> CliResult<()> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer
            .write_record(&fields)
            .map_err(|e| CliError::io(&self.path, e.into()))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn versions() -> serde_json::Value {
    serde_json::json!({
        "npcure": env!("CARGO_PKG_VERSION"),
        "rng_derivation": npcure_core::rng::DERIVATION_VERSION,
    })
}
