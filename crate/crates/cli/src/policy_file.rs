//! Versioned policy file.
//!
//! JSON object with `format = "ldes-policy"`, `version`, `catalog_hash`
//! (SHA-256 of the model configuration the policy was trained for),
//! `state_names`, the stage-0 `capacities`, `termination`, `iterations`
//! and `stages`: one entry per cut pool, `stage` t holding the cuts on the
//! cost-to-go of stage t + 1. Wall-clock times are kept out of the file
//! so identical runs give identical bytes.

use std::path::Path;

use ldes_core::sddp::{Cut, Termination};
use ldes_core::{ModelConfig, Policy, StateVector};
use serde::{Deserialize, Serialize};

use crate::data::sha256_hex;
use crate::error::CliError;

pub const POLICY_FORMAT: &str = "ldes-policy";
pub const POLICY_VERSION: u32 = 1;
pub const POLICY_FILE: &str = "policy.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutRecord {
    pub intercept: f64,
    pub slope: Vec<f64>,
    pub iteration: usize,
    pub trial: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePool {
    pub stage: usize,
    pub cuts: Vec<CutRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub format: String,
    pub version: u32,
    pub catalog_hash: String,
    pub state_names: Vec<String>,
    pub capacities: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    pub stages: Vec<StagePool>,
}

pub fn catalog_hash(model: &ModelConfig) -> String {
    sha256_hex(&serde_json::to_vec(model).expect("model configuration serializes"))
}

impl PolicyFile {
    pub fn from_policy(model: &ModelConfig, policy: &Policy) -> Self {
        Self {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            catalog_hash: catalog_hash(model),
            state_names: model.layout().names().to_vec(),
            capacities: policy.capacities.0.clone(),
            termination: policy.termination,
            iterations: policy.log.last().map_or(0, |r| r.iteration),
            stages: policy
                .pools
                .iter()
                .enumerate()
                .map(|(t, pool)| StagePool {
                    stage: t,
                    cuts: pool
                        .iter()
                        .map(|c| CutRecord {
                            intercept: c.intercept,
                            slope: c.slope.clone(),
                            iteration: c.iteration,
                            trial: c.trial.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds the policy after checking format, version, catalog and
    /// dimensions against `model`.
    pub fn into_policy(self, model: &ModelConfig, num_stages: usize, path: &Path) -> Result<Policy, CliError> {
        let fail = |detail: String| CliError::data(path, detail);
        if self.format != POLICY_FORMAT {
            return Err(fail(format!("format {:?} is not {POLICY_FORMAT:?}", self.format)));
        }
        if self.version != POLICY_VERSION {
            return Err(fail(format!("policy version {} is not supported (expected {POLICY_VERSION})", self.version)));
        }
        if self.catalog_hash != catalog_hash(model) {
            return Err(fail("policy was trained for a different model configuration".into()));
        }
        let dim = model.layout().dim();
        if self.capacities.len() != dim || self.stages.len() != num_stages {
            return Err(fail(format!(
                "policy has {} coordinates and {} pools, the model needs {dim} and {num_stages}",
                self.capacities.len(),
                self.stages.len()
            )));
        }
        let mut policy = Policy::empty(num_stages, dim);
        policy.capacities = StateVector(self.capacities);
        policy.termination = self.termination;
        for (t, pool) in self.stages.into_iter().enumerate() {
            if pool.stage != t {
                return Err(fail(format!("pool {t} is labelled stage {}", pool.stage)));
            }
            for c in pool.cuts {
                let cut = Cut {
                    stage: t + 1,
                    intercept: c.intercept,
                    slope: c.slope,
                    iteration: c.iteration,
                    trial: c.trial,
                };
                policy.push_cut(cut).map_err(|e| fail(format!("stage {t}: {e}")))?;
            }
        }
        Ok(policy)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("policy serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::data(path, "policy file not found; run `ldes train` first"),
            _ => CliError::io(path, e),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Data {
            path: path.into(),
            row: Some(e.line()),
            detail: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ldes_core::instances::{tiny_config, tiny_lattice};
    use ldes_core::sddp::{train, TrainOptions};

    #[test]
    fn round_trip_preserves_the_cuts() {
        let model = tiny_config();
        let policy =
            train(&model, &tiny_lattice(), &TrainOptions { max_iterations: 5, ..TrainOptions::default() }).unwrap();
        let file = PolicyFile::from_policy(&model, &policy);
        let text = serde_json::to_string(&file).unwrap();
        let back: PolicyFile = serde_json::from_str(&text).unwrap();
        let restored = back.into_policy(&model, 3, Path::new("p.json")).unwrap();
        assert_eq!(restored.pools, policy.pools);
        assert_eq!(restored.capacities, policy.capacities);
        assert_eq!(restored.termination, policy.termination);
    }

    #[test]
    fn foreign_policies_are_rejected() {
        let model = tiny_config();
        let file = PolicyFile::from_policy(&model, &Policy::empty(3, model.layout().dim()));
        let mut other = model.clone();
        other.catalog.storages[0].energy_cost = 0.6;
        assert!(file.clone().into_policy(&other, 3, Path::new("p.json")).is_err());
        assert!(file.clone().into_policy(&model, 4, Path::new("p.json")).is_err());
        let mut newer = file;
        newer.version = POLICY_VERSION + 1;
        assert!(newer.into_policy(&model, 3, Path::new("p.json")).is_err());
    }
}
