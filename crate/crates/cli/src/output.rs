//! Self-describing reports: JSON documents embed the full run configuration,
//! CSV files start with a `# config` comment line followed by a fixed header.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(
        command: &str,
        parameters: &impl Serialize,
        seed: Option<u64>,
        output: Option<&Path>,
        format: Format,
    ) -> Self {
        Self {
            command: command.to_string(),
            parameters: serde_json::to_value(parameters).expect("parameters serialize"),
            seed,
            output: output.map(Path::to_path_buf),
            format,
        }
    }

    /// Configuration line for CSV output. Leaves out the output path so that
    /// the same run written to two places produces identical files.
    pub fn csv_comment(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!("# config: command={} seed={} parameters={}", self.command, seed, self.parameters)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
}

impl Default for Metadata {
    fn default() -> Self {
        Self { tool: "tracebounds".into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub config: RunConfig,
    pub metadata: Metadata,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: RunConfig, result: T) -> Self {
        Self { config, metadata: Metadata::default(), result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Renders rows under `header` after the configuration comment.
pub fn render_csv<R: Serialize>(config: &RunConfig, header: &[&str], rows: &[R]) -> String {
    let mut buf = Vec::new();
    writeln!(buf, "{}", config.csv_comment()).expect("write to memory");
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(header).expect("write to memory");
        for row in rows {
            w.serialize(row).expect("row serializes");
        }
        w.flush().expect("write to memory");
    }
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
