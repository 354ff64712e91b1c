//! Rendering of reports as JSON, CSV or text, to stdout or a file.

use crate::errors::{CliError, CliResult};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

impl OutputFormat {
    pub fn parse(name: Option<&str>) -> CliResult<Self> {
        Self::parse_with_default(name, OutputFormat::Json)
    }

    pub fn parse_with_default(name: Option<&str>, default: OutputFormat) -> CliResult<Self> {
        match name {
            None => Ok(default),
            Some("json") => Ok(OutputFormat::Json),
            Some("csv") => Ok(OutputFormat::Csv),
            Some("text") => Ok(OutputFormat::Text),
            Some(other) => Err(CliError::config(format!(
                "unknown format '{other}' (expected json, csv or text)"
            ))),
        }
    }
}

/// A fully rendered report plus its destination.
pub struct Rendered {
    pub content: String,
    pub out: Option<PathBuf>,
}

impl Rendered {
    pub fn plain(content: String) -> Self {
        Rendered { content, out: None }
    }

    pub fn emit(self) -> CliResult<()> {
        match self.out {
            Some(path) => std::fs::write(&path, self.content)
                .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{}", self.content);
                Ok(())
            }
        }
    }
}

/// Picks the representation for `format`; JSON comes from serde, CSV and
/// text are prebuilt by the caller.
pub fn render<T: Serialize>(
    report: &T,
    format: OutputFormat,
    csv: String,
    text: String,
    out: Option<PathBuf>,
) -> CliResult<Rendered> {
    let content = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| CliError::Numeric(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => csv,
        OutputFormat::Text => text,
    };
    Ok(Rendered { content, out })
}
