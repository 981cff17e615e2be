//! Weather input and input hashing.
//!
//! A weather file is comma-separated with a header row. The first column is
//! `timestamp` (`YYYY-MM-DDTHH:MM` or `YYYY-MM-DD HH:MM`, minutes `00`);
//! the others are `demand`, `heat_demand`, `cop` or `cf_<generator>`.

use std::fmt::Write as _;
use std::path::Path;

use ldes_core::instances::{stockpiling_lattice, tiny_lattice};
use ldes_core::weather::{RawSeries, Timestamp, WeatherPath};
use ldes_core::SamplingLattice;
use sha2::{Digest, Sha256};

use crate::config::{PathSelection, Settings, WeatherSource};
use crate::error::CliError;

/// Lattices larger than this cannot be enumerated with `paths = "all"`.
pub const MAX_ENUMERATED_PATHS: u128 = 1 << 20;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    std::fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| CliError::io(path, e))
}

/// Parses `YYYY-MM-DDTHH:MM` (a space may replace the `T`).
pub fn parse_timestamp(s: &str) -> Result<Timestamp, String> {
    let bad = || format!("timestamp {s:?} is not YYYY-MM-DDTHH:MM");
    let s = s.trim();
    let (date, time) = s.split_once(['T', ' ']).ok_or_else(bad)?;
    let mut d = date.split('-');
    let (Some(y), Some(m), Some(day), None) = (d.next(), d.next(), d.next(), d.next()) else {
        return Err(bad());
    };
    let (h, min) = time.split_once(':').ok_or_else(bad)?;
    let min = min.strip_suffix(":00").unwrap_or(min);
    if min != "00" {
        return Err(format!("timestamp {s:?} is not on the hour"));
    }
    let ts = Timestamp::new(
        y.parse().map_err(|_| bad())?,
        m.parse().map_err(|_| bad())?,
        day.parse().map_err(|_| bad())?,
        h.parse().map_err(|_| bad())?,
    );
    if ts.is_valid() {
        Ok(ts)
    } else {
        Err(format!("timestamp {s:?} is not a calendar date and hour"))
    }
}

/// Reads a weather file; parse errors carry the 1-based line number.
pub fn read_series(path: &Path) -> Result<RawSeries, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_series(&bytes, path)
}

pub fn parse_series(bytes: &[u8], path: &Path) -> Result<RawSeries, CliError> {
    let at = |row: Option<usize>, detail: String| CliError::Data { path: path.to_path_buf(), row, detail };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header = reader.headers().map_err(|e| at(Some(1), e.to_string()))?.clone();
    if header.get(0) != Some("timestamp") {
        return Err(at(Some(1), "the first column must be timestamp".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(at(Some(1), "no variable columns".into()));
    }
    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| at(Some(line), e.to_string()))?;
        if record.len() != names.len() + 1 {
            return Err(at(Some(line), format!("{} fields, header has {}", record.len(), names.len() + 1)));
        }
        timestamps.push(parse_timestamp(&record[0]).map_err(|e| at(Some(line), e))?);
        for (k, col) in columns.iter_mut().enumerate() {
            let field = &record[k + 1];
            let v: f64 =
                field.parse().map_err(|_| at(Some(line), format!("{}: {field:?} is not a number", names[k])))?;
            col.push(v);
        }
    }
    RawSeries::new(timestamps, names.into_iter().zip(columns).collect()).map_err(|e| match e {
        // the series reports data rows; the file has a header line first
        ldes_core::weather::WeatherError::OutOfRange { row, .. } => at(Some(row + 1), e.to_string()),
        ldes_core::weather::WeatherError::ParseError { row, detail } => at(Some(row + 1), detail),
        other => at(None, other.to_string()),
    })
}

/// The weather series behind the lattice, when the source is a file.
pub fn load_series(settings: &Settings) -> Result<Option<RawSeries>, CliError> {
    match &settings.weather {
        WeatherSource::Builtin(_) => Ok(None),
        WeatherSource::File { path, block_hours } => {
            let series = read_series(path)?;
            let series = match block_hours {
                Some(b) => {
                    let step = series.step_hours();
                    if b % step != 0 {
                        return Err(CliError::data(
                            path,
                            format!("block of {b} h is not a multiple of the {step} h step"),
                        ));
                    }
                    series.aggregate((b / step) as usize).map_err(|e| CliError::data(path, e.to_string()))?
                }
                None => series,
            };
            if (f64::from(series.step_hours()) - settings.model.period_hours).abs() > 1e-12 {
                return Err(CliError::data(
                    path,
                    format!(
                        "{} h rows do not match period_hours = {}",
                        series.step_hours(),
                        settings.model.period_hours
                    ),
                ));
            }
            Ok(Some(series))
        }
    }
}

pub fn load_lattice(settings: &Settings) -> Result<SamplingLattice, CliError> {
    match (&settings.weather, load_series(settings)?) {
        (WeatherSource::Builtin(name), _) => match name.as_str() {
            "tiny" => Ok(tiny_lattice()),
            "stockpiling" => Ok(stockpiling_lattice()),
            other => Err(CliError::data(other, "unknown builtin lattice")),
        },
        (WeatherSource::File { path, .. }, Some(series)) => {
            SamplingLattice::from_series(&series).map_err(|e| CliError::data(path, e.to_string()))
        }
        (WeatherSource::File { path, .. }, None) => Err(CliError::data(path, "weather file was not read")),
    }
}

/// Paths for simulation and benchmarks, in a fixed order.
pub fn select_paths(settings: &Settings, lattice: &SamplingLattice) -> Result<Vec<WeatherPath>, CliError> {
    match settings.paths {
        PathSelection::Historical => Ok(lattice.historical_paths()),
        PathSelection::All => match lattice.path_count() {
            Some(n) if n <= MAX_ENUMERATED_PATHS => Ok(lattice.all_paths().iter().map(|p| lattice.path(p)).collect()),
            _ => Err(CliError::Config(crate::error::ConfigError::single(
                "simulation.paths",
                format!("{:.3e} paths are too many to enumerate", lattice.path_count_f64()),
            ))),
        },
        PathSelection::Sampled { count } => {
            Ok((0..count as u64).map(|i| lattice.sample_path(settings.seed.wrapping_add(i))).collect())
        }
    }
}
