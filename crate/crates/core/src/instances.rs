//! Small reference instances with known structure, shared by tests, the
//! acceptance suite and the command-line `oracle` run.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{
    Availability, Bounds, Generator, LtcContract, ModelConfig, Scenario, Storage, StorageClass, TechnologyCatalog,
    WeatherVector,
};
use crate::weather::{LatticeNode, SamplingLattice};

fn ldes(energy_cost: f64, power: f64, energy: f64) -> Storage {
    Storage {
        name: "h2".into(),
        class: StorageClass::LongDuration,
        discharge_cost: 20.0,
        charge_cost: 20.0,
        energy_cost,
        discharge_efficiency: 0.5,
        charge_efficiency: 0.7,
        discharge_power: Bounds::up_to(power),
        charge_power: Bounds::up_to(power),
        energy: Bounds::up_to(energy),
    }
}

fn wind(capital_cost: f64, max: f64) -> Generator {
    Generator {
        name: "wind".into(),
        capital_cost,
        marginal_cost: 0.0,
        capacity: Bounds::up_to(max),
        availability: Availability::Weather,
    }
}

/// One wind generator and one hydrogen LDES, No-Imports scenario, 1 h
/// periods, demand around 10 MWh per period.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        catalog: TechnologyCatalog {
            generators: alloc::vec![wind(40.0, 1.0)],
            storages: alloc::vec![ldes(0.5, 1.0, 1.0)],
            ltc: LtcContract::default(),
        },
        scenario: Scenario::no_imports(),
        period_hours: 1.0,
    }
}

fn node(label: &str, demand: &[f64], wind: &[f64]) -> LatticeNode {
    LatticeNode {
        label: label.into(),
        weather: WeatherVector {
            capacity_factors: [(String::from("wind"), wind.to_vec())].into_iter().collect(),
            demand: demand.to_vec(),
            heat_demand: alloc::vec![0.0; demand.len()],
            cop: alloc::vec![1.0; demand.len()],
        },
    }
}

/// Three stages, two samples each, four periods per stage.
pub fn tiny_lattice() -> SamplingLattice {
    let d1 = [0.010, 0.012, 0.011, 0.009];
    let d2 = [0.011, 0.013, 0.012, 0.010];
    let d3 = [0.009, 0.010, 0.011, 0.010];
    SamplingLattice::new(alloc::vec![
        alloc::vec![node("a", &d1, &[0.9, 0.8, 0.2, 0.1]), node("b", &d1, &[0.6, 0.5, 0.4, 0.7])],
        alloc::vec![node("a", &d2, &[0.1, 0.05, 0.1, 0.2]), node("b", &d2, &[0.3, 0.9, 0.8, 0.2])],
        alloc::vec![node("a", &d3, &[0.7, 0.6, 0.9, 0.8]), node("b", &d3, &[0.05, 0.1, 0.05, 0.1])],
    ])
    .expect("tiny lattice is well formed")
}

/// A lattice with a single sample per stage built from stage 1..=T of
/// `path` in [`tiny_lattice`].
pub fn deterministic_lattice(lattice: &SamplingLattice, path: &[usize]) -> SamplingLattice {
    SamplingLattice::new(path.iter().enumerate().map(|(t, &i)| alloc::vec![lattice.nodes(t + 1)[i].clone()]).collect())
        .expect("sub-lattice of a valid lattice")
}

/// Fixed capacities (50 MW wind, 20/30 MW discharge/charge, 100 MWh
/// hydrogen) so that limited and perfect foresight dispatch the same system.
pub fn stockpiling_config() -> ModelConfig {
    let mut storage = ldes(0.5, 0.0, 0.1);
    storage.discharge_power = Bounds::fixed(0.02);
    storage.charge_power = Bounds::fixed(0.03);
    storage.energy = Bounds::fixed(0.1);
    let mut generator = wind(40.0, 0.05);
    generator.capacity = Bounds::fixed(0.05);
    ModelConfig {
        catalog: TechnologyCatalog {
            generators: alloc::vec![generator],
            storages: alloc::vec![storage],
            ltc: LtcContract::default(),
        },
        scenario: Scenario::no_imports(),
        period_hours: 1.0,
    }
}

/// Four stages with the same windy-calm pattern in stages 1, 2 and 4.
/// Stage 3 has ten equiprobable samples; nine are mild and one is windless.
pub fn stockpiling_lattice() -> SamplingLattice {
    let d = [0.010; 4];
    let regular = [0.9, 0.1, 0.5, 0.3];
    let mut stage3: Vec<LatticeNode> = (0..9)
        .map(|i| {
            let f = 0.5 + 0.02 * i as f64;
            node(&alloc::format!("y{i}"), &d, &[f, 0.1, f, 0.1])
        })
        .collect();
    stage3.push(node("y9", &d, &[0.0; 4]));
    SamplingLattice::new(alloc::vec![
        alloc::vec![node("s1", &d, &regular)],
        alloc::vec![node("s2", &d, &regular)],
        stage3,
        alloc::vec![node("s4", &d, &regular)],
    ])
    .expect("stockpiling lattice is well formed")
}
