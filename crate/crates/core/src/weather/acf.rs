use alloc::string::String;
use alloc::vec::Vec;

use super::calendar::summer_month_days;
use super::{RawSeries, WeatherError};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StageLength {
    Month,
    /// 52 weeks of seven days from July 1; the 365th day is dropped.
    Week,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcfSeries {
    pub variable: String,
    /// `rho[k - 1]` for lags `k = 1..=max_lag`.
    pub rho: Vec<f64>,
    pub sigma: f64,
    pub samples: usize,
    /// Half-width of the 95 % band, `2 / sqrt(n)`.
    pub band: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcfReport {
    pub series: Vec<AcfSeries>,
}

/// Mean of every stage, `[year][stage]`.
pub fn stage_means(series: &RawSeries, values: &[f64], length: StageLength) -> Result<Vec<Vec<f64>>, WeatherError> {
    let per_day = 24 / series.step_hours() as usize;
    let per_year = 365 * per_day;
    let first = series.timestamps()[0];
    if first.month != 7 || first.day != 1 || first.hour != 0 || !values.len().is_multiple_of(per_year) {
        return Err(WeatherError::PartialYear(alloc::format!(
            "{} periods from {first} do not form whole July-June years",
            values.len()
        )));
    }
    let stage_lengths: Vec<usize> = match length {
        StageLength::Month => (0..12).map(|m| summer_month_days(m) as usize * per_day).collect(),
        StageLength::Week => alloc::vec![7 * per_day; 52],
    };
    Ok(values
        .chunks_exact(per_year)
        .map(|year| {
            let mut start = 0;
            stage_lengths
                .iter()
                .map(|&len| {
                    let s = &year[start..start + len];
                    start += len;
                    s.iter().sum::<f64>() / len as f64
                })
                .collect()
        })
        .collect())
}

/// Autocorrelation of de-seasonalized stage means.
///
/// Each stage's cross-year mean is subtracted; the lag-`k` covariance is
/// `sum_{t>k} x_t x_{t-k} / (n - k + 1)` over the chronological series and
/// is divided by the population variance of the de-seasonalized series.
pub fn acf_from_stage_means(variable: &str, means: &[Vec<f64>], max_lag: usize) -> Result<AcfSeries, WeatherError> {
    let x: Vec<f64> = deseasonalize(means)?.into_iter().flatten().collect();
    let level = means.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    acf_of_deviations(variable, &x, max_lag, level)
}

/// Subtracts each stage's cross-year mean, `[year][stage]`.
pub fn deseasonalize(means: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, WeatherError> {
    let years = means.len();
    let stages = means.first().map_or(0, Vec::len);
    if years == 0 || stages == 0 || means.iter().any(|y| y.len() != stages) {
        return Err(WeatherError::LengthMismatch("stage means must form a full year-by-stage table".into()));
    }
    let mut seasonal = alloc::vec![0.0; stages];
    for year in means {
        for (m, v) in year.iter().enumerate() {
            seasonal[m] += v;
        }
    }
    for s in &mut seasonal {
        *s /= years as f64;
    }
    Ok(means.iter().map(|year| year.iter().zip(&seasonal).map(|(v, s)| v - s).collect()).collect())
}

fn acf_of_deviations(variable: &str, x: &[f64], max_lag: usize, level: f64) -> Result<AcfSeries, WeatherError> {
    let n = x.len();
    let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    // Deviations at rounding level of the data count as zero.
    if !(var > 0.0) || math::sqrt(var) <= 1e-12 * level || max_lag >= n {
        return Err(WeatherError::ZeroVariance(variable.into()));
    }
    let rho = (1..=max_lag)
        .map(|k| {
            let cov: f64 = (k..n).map(|t| x[t] * x[t - k]).sum::<f64>() / (n - k + 1) as f64;
            cov / var
        })
        .collect();
    Ok(AcfSeries {
        variable: variable.into(),
        rho,
        sigma: math::sqrt(var),
        samples: n,
        band: 2.0 / math::sqrt(n as f64),
    })
}

/// ACF of every column; requires at least three years of data.
pub fn acf_test(series: &RawSeries, length: StageLength, max_lag: usize) -> Result<AcfReport, WeatherError> {
    let per_year = 365 * (24 / series.step_hours() as usize);
    if series.len() < 3 * per_year {
        return Err(WeatherError::PartialYear(alloc::format!(
            "the autocorrelation test needs at least three years, got {} periods",
            series.len()
        )));
    }
    let mut report = AcfReport::default();
    for (name, values) in series.columns() {
        let means = stage_means(series, values, length)?;
        report.series.push(acf_from_stage_means(name, &means, max_lag)?);
    }
    Ok(report)
}
