//! Weather inputs: validated series, block aggregation, the stratified
//! monthly sampling lattice and the stagewise-independence check.

mod acf;
mod calendar;
mod lattice;
mod series;

use alloc::string::String;

pub use acf::{acf_from_stage_means, acf_test, deseasonalize, stage_means, AcfReport, AcfSeries, StageLength};
pub use calendar::{is_leap, summer_month_days, summer_year_label, Timestamp, SUMMER_YEAR_MONTHS};
pub use lattice::{path_count, path_count_f64, LatticeNode, SamplingLattice, WeatherPath};
pub use series::{aggregate, RawSeries, VariableKind};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum WeatherError {
    #[error("gap after {after}: next timestamp {next}, expected a {step_hours} h step")]
    GapDetected { after: Timestamp, next: Timestamp, step_hours: u32 },
    #[error("value {value} in column {column}, row {row} is out of range")]
    OutOfRange { column: String, row: usize, value: f64 },
    #[error("row {row}: {detail}")]
    ParseError { row: usize, detail: String },
    #[error("block of {block} does not divide {periods_per_day} periods per day or {len} periods")]
    IndivisibleBlock { block: usize, periods_per_day: usize, len: usize },
    #[error("partial year: {0}")]
    PartialYear(String),
    #[error("zero variance in {0}")]
    ZeroVariance(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("unknown column {0}; expected demand, heat_demand, cop or cf_<generator>")]
    UnknownColumn(String),
    #[error("stage {stage}: {detail}")]
    InconsistentStage { stage: usize, detail: String },
    #[error("empty input")]
    Empty,
}
