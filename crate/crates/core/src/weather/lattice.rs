use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::calendar::{summer_month_days, summer_year_label};
use super::{RawSeries, VariableKind, WeatherError};
use crate::model::WeatherVector;

/// One historical month (or synthetic sample) of a stage.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeNode {
    pub label: String,
    pub weather: WeatherVector,
}

/// Stratified per-stage sample spaces. Stage `t` (1-based) draws uniformly
/// from its own nodes, independently of every other stage.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingLattice {
    stages: Vec<Vec<LatticeNode>>,
}

/// One weather year: a node index, its weather and its label per stage.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeatherPath {
    pub nodes: Vec<usize>,
    pub labels: Vec<String>,
    pub weather: Vec<WeatherVector>,
}

impl WeatherPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Exact number of paths, `None` on overflow.
pub fn path_count(sizes: &[usize]) -> Option<u128> {
    sizes.iter().try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
}

/// Number of paths in floating point; never overflows for realistic sizes.
pub fn path_count_f64(sizes: &[usize]) -> f64 {
    sizes.iter().map(|&n| n as f64).product()
}

impl SamplingLattice {
    /// `stages[t - 1]` holds the nodes of stage `t`.
    pub fn new(stages: Vec<Vec<LatticeNode>>) -> Result<Self, WeatherError> {
        if stages.is_empty() {
            return Err(WeatherError::Empty);
        }
        for (t, nodes) in stages.iter().enumerate() {
            let Some(first) = nodes.first() else {
                return Err(WeatherError::InconsistentStage { stage: t + 1, detail: "no samples".into() });
            };
            let periods = first.weather.periods();
            for node in nodes {
                node.weather.validate().map_err(|e| WeatherError::InconsistentStage {
                    stage: t + 1,
                    detail: alloc::format!("{}: {e}", node.label),
                })?;
                if node.weather.periods() != periods {
                    return Err(WeatherError::InconsistentStage {
                        stage: t + 1,
                        detail: alloc::format!(
                            "{} has {} periods, expected {periods}",
                            node.label,
                            node.weather.periods()
                        ),
                    });
                }
                let keys_match = node.weather.capacity_factors.keys().eq(first.weather.capacity_factors.keys());
                if !keys_match {
                    return Err(WeatherError::InconsistentStage {
                        stage: t + 1,
                        detail: "capacity factor columns differ".into(),
                    });
                }
            }
        }
        Ok(Self { stages })
    }

    /// Twelve monthly stages over summer-to-summer years (July to June).
    /// The series must start on July 1 at 00:00 and cover whole years.
    pub fn from_series(series: &RawSeries) -> Result<Self, WeatherError> {
        let per_day = 24 / series.step_hours() as usize;
        let per_year = 365 * per_day;
        let first = series.timestamps()[0];
        if first.month != 7 || first.day != 1 || first.hour != 0 {
            return Err(WeatherError::PartialYear(alloc::format!("series starts at {first}, not July 1 00:00")));
        }
        if !series.len().is_multiple_of(per_year) {
            return Err(WeatherError::PartialYear(alloc::format!(
                "{} periods is not a whole number of {per_year}-period years",
                series.len()
            )));
        }
        let years = series.len() / per_year;
        let mut stages: Vec<Vec<LatticeNode>> = (0..12).map(|_| Vec::with_capacity(years)).collect();
        for y in 0..years {
            let label = summer_year_label(first.year + y as i32);
            let mut start = y * per_year;
            for (m, stage) in stages.iter_mut().enumerate() {
                let len = summer_month_days(m) as usize * per_day;
                stage.push(LatticeNode { label: label.clone(), weather: weather_slice(series, start, start + len) });
                start += len;
            }
        }
        Self::new(stages)
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    /// Nodes of stage `t` in `1..=T`.
    pub fn nodes(&self, t: usize) -> &[LatticeNode] {
        &self.stages[t - 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.stages.iter().map(Vec::len).collect()
    }

    pub fn path_count(&self) -> Option<u128> {
        path_count(&self.sizes())
    }

    pub fn path_count_f64(&self) -> f64 {
        path_count_f64(&self.sizes())
    }

    pub fn probability(&self, t: usize) -> f64 {
        1.0 / self.stages[t - 1].len() as f64
    }

    pub fn path(&self, nodes: &[usize]) -> WeatherPath {
        WeatherPath {
            nodes: nodes.to_vec(),
            labels: nodes.iter().enumerate().map(|(t, &i)| self.stages[t][i].label.clone()).collect(),
            weather: nodes.iter().enumerate().map(|(t, &i)| self.stages[t][i].weather.clone()).collect(),
        }
    }

    pub fn sample_path(&self, seed: u64) -> WeatherPath {
        self.sample_path_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_path_with<R: Rng + ?Sized>(&self, rng: &mut R) -> WeatherPath {
        let nodes: Vec<usize> = self.stages.iter().map(|s| rng.gen_range(0..s.len())).collect();
        self.path(&nodes)
    }

    /// One path per label present in every stage, in first-stage order.
    pub fn historical_paths(&self) -> Vec<WeatherPath> {
        let index: Vec<BTreeMap<&str, usize>> =
            self.stages.iter().map(|s| s.iter().enumerate().map(|(i, n)| (n.label.as_str(), i)).collect()).collect();
        self.stages[0]
            .iter()
            .filter_map(|n| {
                let nodes: Option<Vec<usize>> = index.iter().map(|m| m.get(n.label.as_str()).copied()).collect();
                nodes.map(|nodes| self.path(&nodes))
            })
            .collect()
    }

    /// Every path in lexicographic node order. Callers guard the size.
    pub fn all_paths(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new()];
        for s in &self.stages {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..s.len()).map(move |i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

fn weather_slice(series: &RawSeries, from: usize, to: usize) -> WeatherVector {
    let n = to - from;
    let mut w = WeatherVector {
        capacity_factors: BTreeMap::new(),
        demand: alloc::vec![0.0; n],
        heat_demand: alloc::vec![0.0; n],
        cop: alloc::vec![1.0; n],
    };
    for (name, values) in series.columns() {
        let slice = values[from..to].to_vec();
        match VariableKind::from_column(name) {
            Some(VariableKind::CapacityFactor(g)) => {
                w.capacity_factors.insert(g, slice);
            }
            Some(VariableKind::Demand) => w.demand = slice,
            Some(VariableKind::HeatDemand) => w.heat_demand = slice,
            Some(VariableKind::Cop) => w.cop = slice,
            None => {}
        }
    }
    w
}
