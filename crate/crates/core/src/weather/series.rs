use alloc::string::String;
use alloc::vec::Vec;

use super::{Timestamp, WeatherError};

/// Role of an input column, derived from its header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VariableKind {
    /// `cf_<generator>`, a capacity factor in `[0, 1]`.
    CapacityFactor(String),
    /// `demand`, GWh per period.
    Demand,
    /// `heat_demand`, GWh thermal per period.
    HeatDemand,
    /// `cop`, heat-pump coefficient of performance.
    Cop,
}

impl VariableKind {
    pub fn from_column(name: &str) -> Option<Self> {
        match name {
            "demand" => Some(Self::Demand),
            "heat_demand" => Some(Self::HeatDemand),
            "cop" => Some(Self::Cop),
            _ => name.strip_prefix("cf_").filter(|g| !g.is_empty()).map(|g| Self::CapacityFactor(g.into())),
        }
    }
}

const CF_SLACK: f64 = 1e-9;

/// Validated, gap-free, leap-day-free time series on a uniform step.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    timestamps: Vec<Timestamp>,
    step_hours: u32,
    columns: Vec<(String, Vec<f64>)>,
}

impl RawSeries {
    /// Drops February 29, then checks for gaps and ranges. Capacity factors
    /// within `1e-9` of `[0, 1]` are clamped.
    pub fn new(timestamps: Vec<Timestamp>, columns: Vec<(String, Vec<f64>)>) -> Result<Self, WeatherError> {
        for (name, values) in &columns {
            if values.len() != timestamps.len() {
                return Err(WeatherError::LengthMismatch(alloc::format!(
                    "column {name} has {} rows, timestamps have {}",
                    values.len(),
                    timestamps.len()
                )));
            }
            if VariableKind::from_column(name).is_none() {
                return Err(WeatherError::UnknownColumn(name.clone()));
            }
        }
        if let Some((row, ts)) = timestamps.iter().enumerate().find(|(_, t)| !t.is_valid()) {
            return Err(WeatherError::ParseError { row: row + 1, detail: alloc::format!("invalid timestamp {ts}") });
        }
        let keep: Vec<bool> = timestamps.iter().map(|t| !t.is_leap_day()).collect();
        let timestamps: Vec<Timestamp> = timestamps.into_iter().filter(|t| !t.is_leap_day()).collect();
        let mut columns: Vec<(String, Vec<f64>)> = columns
            .into_iter()
            .map(|(n, v)| (n, v.into_iter().zip(&keep).filter(|(_, k)| **k).map(|(x, _)| x).collect()))
            .collect();
        if timestamps.is_empty() {
            return Err(WeatherError::Empty);
        }
        let step =
            if timestamps.len() > 1 { timestamps[1].leap_free_hours() - timestamps[0].leap_free_hours() } else { 1 };
        if step <= 0 || 24 % step != 0 {
            return Err(WeatherError::GapDetected {
                after: timestamps[0],
                next: timestamps[1],
                step_hours: step.max(0) as u32,
            });
        }
        for w in timestamps.windows(2) {
            if w[1].leap_free_hours() - w[0].leap_free_hours() != step {
                return Err(WeatherError::GapDetected { after: w[0], next: w[1], step_hours: step as u32 });
            }
        }
        for (name, values) in columns.iter_mut() {
            let is_cf = matches!(VariableKind::from_column(name), Some(VariableKind::CapacityFactor(_)));
            for (row, v) in values.iter_mut().enumerate() {
                if !v.is_finite() {
                    return Err(WeatherError::OutOfRange { column: name.clone(), row: row + 1, value: *v });
                }
                if is_cf {
                    if *v < -CF_SLACK || *v > 1.0 + CF_SLACK {
                        return Err(WeatherError::OutOfRange { column: name.clone(), row: row + 1, value: *v });
                    }
                    *v = v.clamp(0.0, 1.0);
                }
            }
        }
        Ok(Self { timestamps, step_hours: step as u32, columns })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn step_hours(&self) -> u32 {
        self.step_hours
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn columns(&self) -> &[(String, Vec<f64>)] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Block means over `block` consecutive periods.
    pub fn aggregate(&self, block: usize) -> Result<RawSeries, WeatherError> {
        let per_day = 24 / self.step_hours as usize;
        if block == 0 || !per_day.is_multiple_of(block) || !self.len().is_multiple_of(block) {
            return Err(WeatherError::IndivisibleBlock { block, periods_per_day: per_day, len: self.len() });
        }
        let columns = self
            .columns
            .iter()
            .map(|(n, v)| Ok((n.clone(), aggregate(v, block)?)))
            .collect::<Result<_, WeatherError>>()?;
        Ok(RawSeries {
            timestamps: self.timestamps.iter().step_by(block).copied().collect(),
            step_hours: self.step_hours * block as u32,
            columns,
        })
    }
}

/// Arithmetic mean of each block of `block` values.
pub fn aggregate(values: &[f64], block: usize) -> Result<Vec<f64>, WeatherError> {
    if block == 0 || !values.len().is_multiple_of(block) {
        return Err(WeatherError::IndivisibleBlock { block, periods_per_day: 0, len: values.len() });
    }
    Ok(values.chunks_exact(block).map(|c| c.iter().sum::<f64>() / block as f64).collect())
}
