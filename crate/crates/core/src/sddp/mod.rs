//! Stochastic dual dynamic programming over a [`SamplingLattice`].
//!
//! `pools[t]` holds the cuts on `theta_{t+1}` and lives in stage `t`'s
//! problem for every sample of that stage, so `pools[0]` shapes the
//! capacity decision and `pools[T - 1]` the penultimate dispatch. All cuts
//! use the single-cut (average) form.

mod engine;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use crate::lp::LpStatus;
use crate::model::{DispatchSolution, ModelError, StateVector};

pub use engine::{Sddp, StageZero};
#[cfg(feature = "std")]
pub use train::train;
pub use train::{
    backward_pass, forward_pass, lower_bound, simulate, train_with_clock, upper_bound_estimate, BoundEstimate,
    StopRule, TrainOptions, TrustRegion,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SddpError {
    #[error("stage {stage}{}: solver returned {status:?}", realization.map_or(String::new(), |r| alloc::format!(", realization {r}")))]
    SolverFailure { stage: usize, realization: Option<usize>, status: LpStatus },
    #[error("stage {stage}: {source}")]
    Lp { stage: usize, source: crate::lp::LpError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// `theta_stage >= intercept + slope . x` in stage `stage - 1`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cut {
    pub stage: usize,
    /// EUR.
    pub intercept: f64,
    /// EUR per state unit.
    pub slope: Vec<f64>,
    pub iteration: usize,
    pub trial: Vec<f64>,
}

impl Cut {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.intercept + self.slope.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingRecord {
    pub iteration: usize,
    pub seconds: f64,
    pub lower_bound: f64,
    /// Mean total cost of this iteration's forward paths.
    pub forward_cost: f64,
    pub trust_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    IterationLimit,
    TimeLimit,
    /// The lower bound entered the upper-bound confidence interval.
    BoundsMet,
}

/// Capacities plus the cut pools that define the dispatch policy.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Policy {
    pub num_stages: usize,
    pub state_dim: usize,
    /// Outgoing state of stage 0.
    pub capacities: StateVector,
    pub pools: Vec<Vec<Cut>>,
    pub log: Vec<TrainingRecord>,
    pub termination: Termination,
}

impl Policy {
    pub fn empty(num_stages: usize, state_dim: usize) -> Self {
        Self {
            num_stages,
            state_dim,
            capacities: StateVector(alloc::vec![0.0; state_dim]),
            pools: alloc::vec![Vec::new(); num_stages],
            log: Vec::new(),
            termination: Termination::IterationLimit,
        }
    }

    pub fn num_cuts(&self) -> usize {
        self.pools.iter().map(Vec::len).sum()
    }

    /// Outer approximation of the expected cost-to-go of stage `t + 1`
    /// seen from stage `t`, floored at zero.
    pub fn cost_to_go(&self, t: usize, x: &[f64]) -> f64 {
        self.pools[t].iter().map(|c| c.value(x)).fold(0.0, f64::max)
    }

    /// Appends a cut after checking its dimension.
    pub fn push_cut(&mut self, cut: Cut) -> Result<(), SddpError> {
        if cut.slope.len() != self.state_dim {
            return Err(SddpError::Model(ModelError::DimensionMismatch {
                got: cut.slope.len(),
                expected: self.state_dim,
            }));
        }
        if !cut.intercept.is_finite() || cut.slope.iter().any(|s| !s.is_finite()) {
            return Err(SddpError::InvalidArgument("cut has non-finite coefficients".into()));
        }
        if cut.stage == 0 || cut.stage > self.num_stages {
            return Err(SddpError::InvalidArgument(alloc::format!("no pool for theta_{}", cut.stage)));
        }
        self.pools[cut.stage - 1].push(cut);
        Ok(())
    }
}

/// One solved stage of a forward pass. Stage 0 has no incoming state.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageRecord {
    pub stage: usize,
    pub node: Option<usize>,
    pub label: String,
    pub incoming: StateVector,
    pub outgoing: StateVector,
    pub dispatch: Option<DispatchSolution>,
    /// EUR, without the cost-to-go term.
    pub stage_cost: f64,
    pub cost_to_go: f64,
    /// Duals of the fishing rows, EUR per state unit.
    pub fishing_duals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub stages: Vec<StageRecord>,
}

impl Trajectory {
    pub fn capacities(&self) -> &StateVector {
        &self.stages[0].outgoing
    }

    pub fn capital_cost(&self) -> f64 {
        self.stages[0].stage_cost
    }

    pub fn dispatch_cost(&self) -> f64 {
        self.stages[1..].iter().map(|s| s.stage_cost).sum()
    }

    pub fn total_cost(&self) -> f64 {
        self.stages.iter().map(|s| s.stage_cost).sum()
    }
}

/// Elapsed wall-clock time, injectable so the core stays `no_std`.
pub trait Clock {
    fn elapsed_seconds(&self) -> f64;
}

/// A clock that never advances.
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
pub struct StdClock(std::time::Instant);

#[cfg(feature = "std")]
impl StdClock {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for StdClock {
    fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
