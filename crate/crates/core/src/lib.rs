//! Stochastic dual dynamic programming for capacity expansion with
//! long-duration energy storage (LDES) under weather uncertainty.
//!
//! The crate is `no_std` (with `alloc`) unless the default `std` feature is
//! enabled. It contains:
//!
//! - [`lp`]: a bounded-variable revised simplex solver over a sparse LU
//!   basis factorization,
//! - [`model`]: builders for the capacity stage and the monthly dispatch
//!   stages of a single-node, sector-coupled system,
//! - [`weather`]: block aggregation, the stratified monthly sampling lattice
//!   and the stagewise-independence autocorrelation test,
//! - [`sddp`]: training, bounds and simulation of limited-foresight policies,
//! - [`benchmarks`]: extensive-form, perfect-foresight and single-year
//!   reference models,
//! - [`analysis`]: marginal storage value bidding curves, price duration
//!   curves, trajectory statistics and a KKT price audit,
//! - [`instances`]: small constructed instances used as oracles.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod benchmarks;
pub mod instances;
pub mod lp;
pub(crate) mod math;
pub mod model;
pub mod sddp;
pub mod weather;

pub use analysis::{AnalysisError, BidCurve, DurationCurve, KktReport};
pub use benchmarks::{BenchmarkError, BenchmarkResult};
pub use lp::{LpError, LpInstance, LpSolution, LpStatus, Sense};
pub use model::{
    CapacityDecision, DispatchSolution, ModelConfig, ModelError, Scenario, StageProblem, StateLayout, StateVector,
    TechnologyCatalog, WeatherVector,
};
pub use sddp::{Cut, Policy, SddpError, TrainOptions, Trajectory};
pub use weather::{SamplingLattice, WeatherPath};
