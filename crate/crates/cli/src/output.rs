//! Delimited output tables and the provenance files written with every run.

use std::path::{Path, PathBuf};

use crate::config::Settings;
use crate::data::hash_file;
use crate::error::CliError;

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const INPUT_HASHES: &str = "inputs.sha256";

/// Shortest round-trip decimal form; negative zero prints as `0`.
pub fn num(x: f64) -> String {
    format!("{}", x + 0.0)
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::data(path, format!("{other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Echoes the resolved configuration and hashes every input file, listed
/// by file name so the record does not depend on the working directory.
pub fn write_provenance(out: &Path, settings: &Settings, inputs: &[PathBuf]) -> Result<(), CliError> {
    let mut echo = String::from("# Fully resolved configuration of this run.\n");
    echo.push_str(&toml::to_string(settings).map_err(|e| CliError::data(out.join(RESOLVED_CONFIG), e.to_string()))?);
    let path = out.join(RESOLVED_CONFIG);
    std::fs::write(&path, echo).map_err(|e| CliError::io(&path, e))?;
    let mut lines = String::new();
    for input in inputs {
        let name = input.file_name().map_or_else(|| input.display().to_string(), |n| n.to_string_lossy().into_owned());
        lines.push_str(&format!("{}  {name}\n", hash_file(input)?));
    }
    let path = out.join(INPUT_HASHES);
    std::fs::write(&path, lines).map_err(|e| CliError::io(&path, e))
}
