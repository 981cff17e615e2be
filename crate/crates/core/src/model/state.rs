use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use super::{ModelError, StorageClass, TechnologyCatalog};

/// Meaning of one state coordinate. Indices refer to the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StateKind {
    Generation(usize),
    DischargePower(usize),
    ChargePower(usize),
    Energy(usize),
    /// Initial and target level of an LDES.
    InitialLevel(usize),
    LtcVolume,
    /// End-of-stage level of an LDES; the only coordinate that evolves.
    Level(usize),
}

/// Ordering of the state vector for one catalog:
/// generators, then `[F, H, E]` per storage, then `e_ini` per LDES, the LTC
/// volume, and finally the end-of-stage level per LDES.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateLayout {
    kinds: Vec<StateKind>,
    names: Vec<String>,
}

impl StateLayout {
    pub fn new(catalog: &TechnologyCatalog) -> Self {
        let mut kinds = Vec::new();
        let mut names = Vec::new();
        for (r, g) in catalog.generators.iter().enumerate() {
            kinds.push(StateKind::Generation(r));
            names.push(alloc::format!("G[{}]", g.name));
        }
        for (s, st) in catalog.storages.iter().enumerate() {
            kinds.push(StateKind::DischargePower(s));
            names.push(alloc::format!("F[{}]", st.name));
            kinds.push(StateKind::ChargePower(s));
            names.push(alloc::format!("H[{}]", st.name));
            kinds.push(StateKind::Energy(s));
            names.push(alloc::format!("E[{}]", st.name));
        }
        let ldes: Vec<usize> = catalog
            .storages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.class == StorageClass::LongDuration)
            .map(|(i, _)| i)
            .collect();
        for &s in &ldes {
            kinds.push(StateKind::InitialLevel(s));
            names.push(alloc::format!("e_ini[{}]", catalog.storages[s].name));
        }
        kinds.push(StateKind::LtcVolume);
        names.push("I_H2".into());
        for &s in &ldes {
            kinds.push(StateKind::Level(s));
            names.push(alloc::format!("e[{}]", catalog.storages[s].name));
        }
        Self { kinds, names }
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[StateKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, kind: StateKind) -> Option<usize> {
        self.kinds.iter().position(|k| *k == kind)
    }

    /// Coordinates that change between stages.
    pub fn level_coordinates(&self) -> Vec<usize> {
        self.kinds.iter().enumerate().filter(|(_, k)| matches!(k, StateKind::Level(_))).map(|(i, _)| i).collect()
    }

    pub fn is_capacity(&self, k: usize) -> bool {
        matches!(
            self.kinds[k],
            StateKind::Generation(_) | StateKind::DischargePower(_) | StateKind::ChargePower(_) | StateKind::Energy(_)
        )
    }
}

/// Ordered state coordinates, laid out by [`StateLayout`].
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StateVector(pub Vec<f64>);

impl Deref for StateVector {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Stage-0 decisions in named form.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CapacityDecision {
    /// GW per generator.
    pub generation: Vec<f64>,
    /// GW per storage.
    pub discharge_power: Vec<f64>,
    /// GW per storage.
    pub charge_power: Vec<f64>,
    /// GWh per storage.
    pub energy: Vec<f64>,
    /// GWh per storage; zero for short-duration storages.
    pub initial_level: Vec<f64>,
    /// GWh H2 per period.
    pub ltc_volume: f64,
}

impl CapacityDecision {
    pub fn from_state(layout: &StateLayout, catalog: &TechnologyCatalog, x: &StateVector) -> Result<Self, ModelError> {
        if x.len() != layout.dim() {
            return Err(ModelError::DimensionMismatch { got: x.len(), expected: layout.dim() });
        }
        let ns = catalog.storages.len();
        let mut d = CapacityDecision {
            generation: alloc::vec![0.0; catalog.generators.len()],
            discharge_power: alloc::vec![0.0; ns],
            charge_power: alloc::vec![0.0; ns],
            energy: alloc::vec![0.0; ns],
            initial_level: alloc::vec![0.0; ns],
            ltc_volume: 0.0,
        };
        for (k, kind) in layout.kinds().iter().enumerate() {
            match *kind {
                StateKind::Generation(r) => d.generation[r] = x[k],
                StateKind::DischargePower(s) => d.discharge_power[s] = x[k],
                StateKind::ChargePower(s) => d.charge_power[s] = x[k],
                StateKind::Energy(s) => d.energy[s] = x[k],
                StateKind::InitialLevel(s) => d.initial_level[s] = x[k],
                StateKind::LtcVolume => d.ltc_volume = x[k],
                StateKind::Level(_) => {}
            }
        }
        Ok(d)
    }

    /// State vector leaving stage 0: every LDES starts at its initial level.
    pub fn to_state(&self, layout: &StateLayout) -> StateVector {
        StateVector(
            layout
                .kinds()
                .iter()
                .map(|kind| match *kind {
                    StateKind::Generation(r) => self.generation[r],
                    StateKind::DischargePower(s) => self.discharge_power[s],
                    StateKind::ChargePower(s) => self.charge_power[s],
                    StateKind::Energy(s) => self.energy[s],
                    StateKind::InitialLevel(s) | StateKind::Level(s) => self.initial_level[s],
                    StateKind::LtcVolume => self.ltc_volume,
                })
                .collect(),
        )
    }

    /// Checks catalog bounds and `0 <= e_ini <= E`, with absolute slack `tol`.
    pub fn within_bounds(&self, catalog: &TechnologyCatalog, tol: f64) -> bool {
        let inside = |v: f64, b: &super::Bounds| v >= b.min - tol && v <= b.max + tol;
        catalog.generators.iter().zip(&self.generation).all(|(g, v)| inside(*v, &g.capacity))
            && catalog.storages.iter().enumerate().all(|(s, st)| {
                inside(self.discharge_power[s], &st.discharge_power)
                    && inside(self.charge_power[s], &st.charge_power)
                    && inside(self.energy[s], &st.energy)
                    && self.initial_level[s] >= -tol
                    && self.initial_level[s] <= self.energy[s] + tol
            })
            && self.ltc_volume >= -tol
            && self.ltc_volume <= catalog.ltc.max_volume + tol
    }
}
