//! Single-node sector-coupled capacity expansion model.
//!
//! Stage `0` chooses capacities, the initial long-duration storage level
//! (which doubles as the end-of-horizon target) and the long-term H2
//! contract volume. Stages `1..=T` dispatch one weather sample each. The
//! stages are coupled through a [`StateVector`]: every capacity decision is
//! passed through unchanged, and each LDES level is propagated by the plant
//! equation.
//!
//! Units: power in GW, energy in GWh per period, money in EUR. Capital
//! costs are given per kW (or kWh) and year, marginal prices per MWh.
//! Storage levels are measured on the stored-energy side, so the charge
//! efficiency applies when filling and the discharge efficiency when
//! emptying; for the hydrogen LDES this means GWh of H2.

mod capacity;
mod dispatch;
mod state;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::lp::{LpError, LpInstance, RowId, VarId};

pub use capacity::build_capacity_stage;
pub use dispatch::{build_dispatch_stage, terminal_penalty_rows, DispatchIndex};
pub use state::{CapacityDecision, StateKind, StateLayout, StateVector};

/// EUR/MWh to EUR/GWh.
pub const PER_GWH: f64 = 1_000.0;
/// EUR/kW (or EUR/kWh) to EUR/GW (or EUR/GWh).
pub const PER_GW: f64 = 1_000_000.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("inconsistent bounds for {field}: {lower} > {upper}")]
    InconsistentBounds { field: String, lower: f64, upper: f64 },
    #[error("invalid value for {field}: {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("weather series lengths differ: {0}")]
    LengthMismatch(String),
    #[error("stage {stage} outside 1..={last}")]
    UnknownStage { stage: usize, last: usize },
    #[error("state dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("solution is not optimal")]
    NotOptimal,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn up_to(max: f64) -> Self {
        Self { min: 0.0, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub const fn unbounded() -> Self {
        Self { min: 0.0, max: f64::INFINITY }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Availability {
    /// Capacity factor read from the weather sample, keyed by generator name.
    Weather,
    /// Constant capacity factor (bioenergy, nuclear).
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Generator {
    pub name: String,
    /// EUR per kW and year.
    pub capital_cost: f64,
    /// EUR per MWh.
    pub marginal_cost: f64,
    /// GW.
    pub capacity: Bounds,
    pub availability: Availability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StorageClass {
    /// Balanced within every stage (monthly circularity).
    ShortDuration,
    /// Carries its level across stages.
    LongDuration,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Storage {
    pub name: String,
    pub class: StorageClass,
    /// EUR per kW and year of discharge power.
    pub discharge_cost: f64,
    /// EUR per kW and year of charge power.
    pub charge_cost: f64,
    /// EUR per kWh and year of energy capacity.
    pub energy_cost: f64,
    pub discharge_efficiency: f64,
    pub charge_efficiency: f64,
    pub discharge_power: Bounds,
    pub charge_power: Bounds,
    pub energy: Bounds,
}

/// Long-term H2 contract: a constant delivery per period chosen in stage 0,
/// with per-period off-take flexibility.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LtcContract {
    /// EUR per MWh of H2 taken.
    pub price: f64,
    /// Upper bound on the contracted volume, GWh H2 per period.
    pub max_volume: f64,
    /// Relative off-take flexibility, `0.1` for +/-10 %.
    pub flexibility: f64,
}

impl Default for LtcContract {
    fn default() -> Self {
        Self { price: 0.0, max_volume: 0.0, flexibility: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TechnologyCatalog {
    pub generators: Vec<Generator>,
    pub storages: Vec<Storage>,
    pub ltc: LtcContract,
}

impl TechnologyCatalog {
    pub fn ldes(&self) -> impl Iterator<Item = (usize, &Storage)> {
        self.storages.iter().enumerate().filter(|(_, s)| s.class == StorageClass::LongDuration)
    }

    /// The LDES that receives H2 imports (the first long-duration storage).
    pub fn hydrogen_storage(&self) -> Option<usize> {
        self.ldes().map(|(i, _)| i).next()
    }

    /// Every violation, not just the first.
    pub fn validate(&self) -> Vec<ModelError> {
        let mut errs = Vec::new();
        let mut names = BTreeMap::new();
        let check_bounds = |field: String, b: &Bounds, errs: &mut Vec<ModelError>| {
            if b.min.is_nan() || b.max.is_nan() || b.min < 0.0 {
                errs.push(ModelError::InvalidValue { field, reason: "bounds must be nonnegative numbers".into() });
            } else if b.min > b.max {
                errs.push(ModelError::InconsistentBounds { field, lower: b.min, upper: b.max });
            }
        };
        let nonneg = |field: String, v: f64, errs: &mut Vec<ModelError>| {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(ModelError::InvalidValue { field, reason: alloc::format!("{v} must be finite and >= 0") });
            }
        };
        let efficiency = |field: String, v: f64, errs: &mut Vec<ModelError>| {
            if !(v > 0.0 && v <= 1.0) {
                errs.push(ModelError::InvalidValue { field, reason: alloc::format!("{v} is not in (0, 1]") });
            }
        };
        for g in &self.generators {
            let p = alloc::format!("generators.{}", g.name);
            if names.insert(g.name.clone(), ()).is_some() {
                errs.push(ModelError::InvalidValue { field: p.clone(), reason: "duplicate name".into() });
            }
            nonneg(alloc::format!("{p}.capital_cost"), g.capital_cost, &mut errs);
            nonneg(alloc::format!("{p}.marginal_cost"), g.marginal_cost, &mut errs);
            check_bounds(alloc::format!("{p}.capacity"), &g.capacity, &mut errs);
            if let Availability::Constant(phi) = g.availability {
                if !(0.0..=1.0).contains(&phi) {
                    errs.push(ModelError::InvalidValue {
                        field: alloc::format!("{p}.availability"),
                        reason: alloc::format!("{phi} is not in [0, 1]"),
                    });
                }
            }
        }
        for s in &self.storages {
            let p = alloc::format!("storages.{}", s.name);
            if names.insert(s.name.clone(), ()).is_some() {
                errs.push(ModelError::InvalidValue { field: p.clone(), reason: "duplicate name".into() });
            }
            nonneg(alloc::format!("{p}.discharge_cost"), s.discharge_cost, &mut errs);
            nonneg(alloc::format!("{p}.charge_cost"), s.charge_cost, &mut errs);
            nonneg(alloc::format!("{p}.energy_cost"), s.energy_cost, &mut errs);
            efficiency(alloc::format!("{p}.discharge_efficiency"), s.discharge_efficiency, &mut errs);
            efficiency(alloc::format!("{p}.charge_efficiency"), s.charge_efficiency, &mut errs);
            check_bounds(alloc::format!("{p}.discharge_power"), &s.discharge_power, &mut errs);
            check_bounds(alloc::format!("{p}.charge_power"), &s.charge_power, &mut errs);
            check_bounds(alloc::format!("{p}.energy"), &s.energy, &mut errs);
        }
        nonneg("ltc.price".into(), self.ltc.price, &mut errs);
        nonneg("ltc.max_volume".into(), self.ltc.max_volume, &mut errs);
        if !(0.0..=1.0).contains(&self.ltc.flexibility) {
            errs.push(ModelError::InvalidValue { field: "ltc.flexibility".into(), reason: "must be in [0, 1]".into() });
        }
        if self.ltc.max_volume > 0.0 && self.hydrogen_storage().is_none() {
            errs.push(ModelError::InvalidValue {
                field: "ltc.max_volume".into(),
                reason: "a long-term contract needs a long-duration storage".into(),
            });
        }
        errs
    }
}

/// H2 spot imports delivered into the hydrogen storage.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpotMarket {
    /// EUR per MWh of H2.
    pub price: f64,
    /// GWh H2 per hour; `None` is uncapped.
    pub cap_per_hour: Option<f64>,
}

/// Outside options: load shedding at VOLL plus optional spot imports.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub name: String,
    /// EUR per MWh of electricity.
    pub voll: f64,
    pub spot: Option<SpotMarket>,
}

impl Scenario {
    pub const VOLL: f64 = 100_000.0;
    pub const SPOT_PRICE: f64 = 250.0;
    pub const SPOT_CAP_PER_HOUR: f64 = 5.5;

    pub fn no_imports() -> Self {
        Self { name: "no_imports".into(), voll: Self::VOLL, spot: None }
    }

    pub fn constrained_imports() -> Self {
        Self {
            name: "constrained_imports".into(),
            voll: Self::VOLL,
            spot: Some(SpotMarket { price: Self::SPOT_PRICE, cap_per_hour: Some(Self::SPOT_CAP_PER_HOUR) }),
        }
    }

    pub fn unlimited_imports() -> Self {
        Self {
            name: "unlimited_imports".into(),
            voll: Self::VOLL,
            spot: Some(SpotMarket { price: Self::SPOT_PRICE, cap_per_hour: None }),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "no_imports" => Some(Self::no_imports()),
            "constrained_imports" => Some(Self::constrained_imports()),
            "unlimited_imports" => Some(Self::unlimited_imports()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Vec<ModelError> {
        let mut errs = Vec::new();
        if !(self.voll.is_finite() && self.voll >= 0.0) {
            errs.push(ModelError::InvalidValue {
                field: "scenario.voll".into(),
                reason: "must be finite and >= 0".into(),
            });
        }
        if let Some(spot) = &self.spot {
            if !(spot.price.is_finite() && spot.price >= 0.0) {
                errs.push(ModelError::InvalidValue {
                    field: "scenario.spot.price".into(),
                    reason: "must be finite and >= 0".into(),
                });
            }
            if let Some(cap) = spot.cap_per_hour {
                if !(cap >= 0.0) {
                    errs.push(ModelError::InvalidValue {
                        field: "scenario.spot.cap_per_hour".into(),
                        reason: "must be >= 0".into(),
                    });
                }
            }
        }
        errs
    }
}

/// Everything the stage builders need besides the weather.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub catalog: TechnologyCatalog,
    pub scenario: Scenario,
    /// Length of one dispatch period in hours.
    pub period_hours: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Vec<ModelError> {
        let mut errs = self.catalog.validate();
        errs.extend(self.scenario.validate());
        if !(self.period_hours > 0.0 && self.period_hours.is_finite()) {
            errs.push(ModelError::InvalidValue { field: "period_hours".into(), reason: "must be > 0".into() });
        }
        errs
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::new(&self.catalog)
    }
}

/// One stage's exogenous realization. Energies are GWh per period.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeatherVector {
    /// Capacity factors in `[0, 1]` per weather-driven generator.
    pub capacity_factors: BTreeMap<String, Vec<f64>>,
    pub demand: Vec<f64>,
    /// Heat demand, GWh thermal per period.
    pub heat_demand: Vec<f64>,
    /// Heat-pump coefficient of performance.
    pub cop: Vec<f64>,
}

impl WeatherVector {
    /// A stage with flat profiles.
    pub fn flat(periods: usize, demand: f64, factors: &[(&str, f64)]) -> Self {
        Self {
            capacity_factors: factors.iter().map(|(n, v)| (String::from(*n), alloc::vec![*v; periods])).collect(),
            demand: alloc::vec![demand; periods],
            heat_demand: alloc::vec![0.0; periods],
            cop: alloc::vec![1.0; periods],
        }
    }

    pub fn periods(&self) -> usize {
        self.demand.len()
    }

    /// Electricity needed in period `h`: demand plus heat over COP.
    pub fn net_demand(&self, h: usize) -> f64 {
        self.demand[h] + self.heat_demand[h] / self.cop[h]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.demand.len();
        let mut bad = Vec::new();
        if self.heat_demand.len() != n {
            bad.push(alloc::format!("heat_demand has {} periods", self.heat_demand.len()));
        }
        if self.cop.len() != n {
            bad.push(alloc::format!("cop has {} periods", self.cop.len()));
        }
        for (k, v) in &self.capacity_factors {
            if v.len() != n {
                bad.push(alloc::format!("capacity factor {k} has {} periods", v.len()));
            }
        }
        if !bad.is_empty() {
            return Err(ModelError::LengthMismatch(alloc::format!("demand has {n} periods but {}", bad.join(", "))));
        }
        for (k, v) in &self.capacity_factors {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ModelError::InvalidValue {
                    field: alloc::format!("capacity factor {k}"),
                    reason: "outside [0, 1]".into(),
                });
            }
        }
        if self.cop.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(ModelError::InvalidValue { field: "cop".into(), reason: "must be > 0".into() });
        }
        if self.demand.iter().chain(&self.heat_demand).any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(ModelError::InvalidValue { field: "demand".into(), reason: "must be finite and >= 0".into() });
        }
        Ok(())
    }
}

/// Dispatch of one stage, read back from an optimal solve.
///
/// Indexed `[generator][period]` and `[storage][period]`.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DispatchSolution {
    pub generation: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub level: Vec<Vec<f64>>,
    pub shedding: Vec<f64>,
    pub spot_imports: Vec<f64>,
    pub ltc_offtake: Vec<f64>,
    pub h2_spill: Vec<f64>,
    /// Terminal shortfall per storage (final stage only, zero elsewhere).
    pub terminal_shortfall: Vec<f64>,
    /// Electricity price per period, EUR/MWh (dual of the energy balance).
    pub prices: Vec<f64>,
    /// Marginal storage value per storage and period, EUR per MWh stored.
    pub msv: Vec<Vec<f64>>,
    /// Stage cost without the cost-to-go term, EUR.
    pub stage_cost: f64,
    /// Value of the cost-to-go variable, EUR.
    pub cost_to_go: f64,
}

/// Which position a stage problem takes in the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageRole {
    Capacity,
    Dispatch { stage: usize, last: usize },
}

/// The LP of one stage together with the handles needed to wire it into
/// the decomposition.
#[derive(Clone, Debug)]
pub struct StageProblem {
    pub role: StageRole,
    pub lp: LpInstance,
    /// Outgoing value of every state coordinate.
    pub outgoing: Vec<VarId>,
    /// Fishing rows `xbar_k = x_in_k`; empty in stage 0.
    pub fishing: Vec<RowId>,
    /// Cost-to-go variable; absent in the final stage.
    pub theta: Option<VarId>,
    pub incoming: Option<StateVector>,
    pub dispatch: Option<DispatchIndex>,
    pub cut_rows: usize,
}

impl StageProblem {
    pub fn is_final(&self) -> bool {
        matches!(self.role, StageRole::Dispatch { stage, last } if stage == last)
    }

    /// Pins the fishing copies to `x_in`.
    pub fn apply_incoming_state(&self, x_in: &StateVector) -> Result<StageProblem, ModelError> {
        let mut p = self.clone();
        p.set_incoming_state(x_in)?;
        Ok(p)
    }

    pub fn set_incoming_state(&mut self, x_in: &StateVector) -> Result<(), ModelError> {
        if self.fishing.is_empty() {
            return Err(ModelError::InvalidValue {
                field: "incoming state".into(),
                reason: "the capacity stage has no incoming state".into(),
            });
        }
        if x_in.len() != self.fishing.len() {
            return Err(ModelError::DimensionMismatch { got: x_in.len(), expected: self.fishing.len() });
        }
        for (row, v) in self.fishing.iter().zip(x_in.iter()) {
            self.lp.set_rhs(*row, *v);
        }
        self.incoming = Some(x_in.clone());
        Ok(())
    }

    /// Adds `theta >= intercept + slope . x_out`.
    pub fn add_cut(&mut self, intercept: f64, slope: &[f64]) -> Result<RowId, ModelError> {
        let theta = self.theta.ok_or_else(|| ModelError::InvalidValue {
            field: "cut".into(),
            reason: "the final stage has no cost-to-go".into(),
        })?;
        if slope.len() != self.outgoing.len() {
            return Err(ModelError::DimensionMismatch { got: slope.len(), expected: self.outgoing.len() });
        }
        let mut terms = alloc::vec![(theta, 1.0)];
        terms.extend(self.outgoing.iter().zip(slope).filter(|(_, b)| **b != 0.0).map(|(v, b)| (*v, -*b)));
        let label = alloc::format!("cut[{}]", self.cut_rows);
        let row = self.lp.add_row(label, terms, crate::lp::Sense::Ge, intercept)?;
        self.cut_rows += 1;
        Ok(row)
    }

    /// Outgoing state of an optimal solve. Pass-through coordinates are
    /// copied from the incoming state, so they are preserved bit for bit.
    pub fn extract_state(&self, sol: &crate::lp::LpSolution) -> Result<StateVector, ModelError> {
        if !sol.is_optimal() {
            return Err(ModelError::NotOptimal);
        }
        let layout_levels = self.dispatch.as_ref().map(|d| &d.level_coordinates);
        let mut out: Vec<f64> = self.outgoing.iter().map(|v| sol.value(*v)).collect();
        if let Some(x_in) = &self.incoming {
            for (k, slot) in out.iter_mut().enumerate() {
                let is_level = layout_levels.is_some_and(|l| l.contains(&k));
                if !is_level {
                    *slot = x_in[k];
                }
            }
        }
        Ok(StateVector(out))
    }

    /// Dispatch read-back of an optimal solve of a dispatch stage.
    pub fn dispatch_solution(&self, sol: &crate::lp::LpSolution) -> Result<DispatchSolution, ModelError> {
        match &self.dispatch {
            Some(d) => d.read(self, sol),
            None => Err(ModelError::InvalidValue {
                field: "dispatch".into(),
                reason: "the capacity stage has no dispatch".into(),
            }),
        }
    }

    /// Objective without the cost-to-go term.
    pub fn stage_cost(&self, sol: &crate::lp::LpSolution) -> f64 {
        sol.objective - self.theta.map_or(0.0, |t| sol.value(t))
    }
}

#[cfg(test)]
mod tests;
