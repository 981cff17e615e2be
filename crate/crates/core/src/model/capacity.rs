use alloc::vec::Vec;

use super::{ModelError, StageProblem, StageRole, StateKind, StateLayout, StorageClass, TechnologyCatalog, PER_GW};
use crate::lp::{LpInstance, Sense, VarId};

/// Stage 0: capital cost of all capacities plus `theta_1 >= 0`.
pub fn build_capacity_stage(catalog: &TechnologyCatalog) -> Result<StageProblem, ModelError> {
    if let Some(e) = catalog.validate().into_iter().find(|e| matches!(e, ModelError::InconsistentBounds { .. })) {
        return Err(e);
    }
    let layout = StateLayout::new(catalog);
    let mut lp = LpInstance::new();
    let mut outgoing: Vec<Option<VarId>> = alloc::vec![None; layout.dim()];
    let mut energy = alloc::vec![None; catalog.storages.len()];
    let mut initial = alloc::vec![None; catalog.storages.len()];

    for (k, kind) in layout.kinds().iter().enumerate() {
        let name = layout.names()[k].clone();
        let var = match *kind {
            StateKind::Generation(r) => {
                let g = &catalog.generators[r];
                lp.add_variable(name, g.capital_cost * PER_GW, g.capacity.min, g.capacity.max)?
            }
            StateKind::DischargePower(s) => {
                let st = &catalog.storages[s];
                lp.add_variable(name, st.discharge_cost * PER_GW, st.discharge_power.min, st.discharge_power.max)?
            }
            StateKind::ChargePower(s) => {
                let st = &catalog.storages[s];
                lp.add_variable(name, st.charge_cost * PER_GW, st.charge_power.min, st.charge_power.max)?
            }
            StateKind::Energy(s) => {
                let st = &catalog.storages[s];
                let v = lp.add_variable(name, st.energy_cost * PER_GW, st.energy.min, st.energy.max)?;
                energy[s] = Some(v);
                v
            }
            StateKind::InitialLevel(s) => {
                debug_assert_eq!(catalog.storages[s].class, StorageClass::LongDuration);
                let v = lp.add_variable(name, 0.0, 0.0, f64::INFINITY)?;
                initial[s] = Some(v);
                v
            }
            StateKind::LtcVolume => lp.add_variable(name, 0.0, 0.0, catalog.ltc.max_volume)?,
            // The opening level of stage 1 is the initial level.
            StateKind::Level(s) => initial[s].expect("initial level precedes level"),
        };
        outgoing[k] = Some(var);
    }
    for (s, st) in catalog.storages.iter().enumerate() {
        if st.class == StorageClass::LongDuration {
            let (e0, e) = (initial[s].unwrap(), energy[s].unwrap());
            lp.add_row(alloc::format!("ini_cap[{}]", st.name), alloc::vec![(e0, 1.0), (e, -1.0)], Sense::Le, 0.0)?;
        }
    }
    let theta = lp.add_variable("theta", 1.0, 0.0, f64::INFINITY)?;

    Ok(StageProblem {
        role: StageRole::Capacity,
        lp,
        outgoing: outgoing.into_iter().map(|v| v.unwrap()).collect(),
        fishing: Vec::new(),
        theta: Some(theta),
        incoming: None,
        dispatch: None,
        cut_rows: 0,
    })
}
