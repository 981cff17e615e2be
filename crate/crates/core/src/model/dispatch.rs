use alloc::vec::Vec;

use super::{
    Availability, DispatchSolution, ModelConfig, ModelError, StageProblem, StageRole, StateKind, StateLayout,
    StorageClass, TechnologyCatalog, WeatherVector, PER_GWH,
};
use crate::lp::{LpInstance, LpSolution, RowId, Sense, VarId};

/// Column and row handles of a dispatch stage.
#[derive(Clone, Debug, PartialEq)]
pub struct DispatchIndex {
    pub periods: usize,
    /// `[generator][period]`.
    pub generation: Vec<Vec<VarId>>,
    /// `[storage][period]`.
    pub discharge: Vec<Vec<VarId>>,
    pub charge: Vec<Vec<VarId>>,
    pub level: Vec<Vec<VarId>>,
    pub shedding: Vec<VarId>,
    pub spot: Vec<VarId>,
    pub ltc: Vec<VarId>,
    pub spill: Vec<VarId>,
    /// Terminal shortfall per storage, final stage only.
    pub shortfall: Vec<Option<VarId>>,
    pub balance: Vec<RowId>,
    /// `[storage][period]`.
    pub storage_balance: Vec<Vec<RowId>>,
    /// Local copies of the incoming state.
    pub copies: Vec<VarId>,
    pub level_coordinates: Vec<usize>,
    /// Electricity requirement per period, GWh.
    pub net_demand: Vec<f64>,
}

impl DispatchIndex {
    pub fn read(&self, problem: &StageProblem, sol: &LpSolution) -> Result<DispatchSolution, ModelError> {
        if !sol.is_optimal() {
            return Err(ModelError::NotOptimal);
        }
        let vals = |vs: &[VarId]| vs.iter().map(|v| sol.value(*v)).collect::<Vec<f64>>();
        let grid = |vs: &[Vec<VarId>]| vs.iter().map(|row| vals(row)).collect::<Vec<_>>();
        Ok(DispatchSolution {
            generation: grid(&self.generation),
            discharge: grid(&self.discharge),
            charge: grid(&self.charge),
            level: grid(&self.level),
            shedding: vals(&self.shedding),
            spot_imports: vals(&self.spot),
            ltc_offtake: vals(&self.ltc),
            h2_spill: vals(&self.spill),
            terminal_shortfall: self.shortfall.iter().map(|v| v.map_or(0.0, |v| sol.value(v))).collect(),
            prices: self.balance.iter().map(|r| sol.dual(*r) / PER_GWH).collect(),
            msv: self
                .storage_balance
                .iter()
                .map(|rows| rows.iter().map(|r| -sol.dual(*r) / PER_GWH).collect())
                .collect(),
            stage_cost: problem.stage_cost(sol),
            cost_to_go: problem.theta.map_or(0.0, |t| sol.value(t)),
        })
    }
}

/// Rows `e_ini - e_H - p <= 0` with `p >= 0` priced at VOLL, per LDES.
///
/// `copies` holds the local copy of every state coordinate and `ending`
/// the last-period level variable per storage.
pub fn terminal_penalty_rows(
    lp: &mut LpInstance,
    catalog: &TechnologyCatalog,
    voll: f64,
    layout: &StateLayout,
    copies: &[VarId],
    ending: &[VarId],
) -> Result<Vec<Option<VarId>>, ModelError> {
    let mut shortfall = alloc::vec![None; catalog.storages.len()];
    for (s, st) in catalog.ldes() {
        let k = layout.index_of(StateKind::InitialLevel(s)).expect("LDES has an initial level");
        let p = lp.add_variable(alloc::format!("shortfall[{}]", st.name), voll * PER_GWH, 0.0, f64::INFINITY)?;
        lp.add_row(
            alloc::format!("target[{}]", st.name),
            alloc::vec![(copies[k], 1.0), (ending[s], -1.0), (p, -1.0)],
            Sense::Le,
            0.0,
        )?;
        shortfall[s] = Some(p);
    }
    Ok(shortfall)
}

/// Dispatch stage `t` of `last` for one weather sample.
pub fn build_dispatch_stage(
    t: usize,
    last: usize,
    config: &ModelConfig,
    xi: &WeatherVector,
) -> Result<StageProblem, ModelError> {
    if t == 0 || t > last {
        return Err(ModelError::UnknownStage { stage: t, last });
    }
    xi.validate()?;
    let catalog = &config.catalog;
    let dt = config.period_hours;
    let n = xi.periods();
    let layout = StateLayout::new(catalog);
    let mut lp = LpInstance::new();

    let mut copies = Vec::with_capacity(layout.dim());
    let mut fishing = Vec::with_capacity(layout.dim());
    for name in layout.names() {
        let v = lp.add_variable(alloc::format!("in.{name}"), 0.0, f64::NEG_INFINITY, f64::INFINITY)?;
        copies.push(v);
    }
    for (k, name) in layout.names().iter().enumerate() {
        fishing.push(lp.add_row(alloc::format!("fish.{name}"), alloc::vec![(copies[k], 1.0)], Sense::Eq, 0.0)?);
    }
    let copy = |kind: StateKind| copies[layout.index_of(kind).expect("coordinate exists")];

    let mut generation = Vec::new();
    for (r, g) in catalog.generators.iter().enumerate() {
        let factors: Vec<f64> = match &g.availability {
            Availability::Constant(phi) => alloc::vec![*phi; n],
            Availability::Weather => {
                xi.capacity_factors.get(&g.name).cloned().ok_or_else(|| ModelError::InvalidValue {
                    field: alloc::format!("weather.{}", g.name),
                    reason: "no capacity factor series".into(),
                })?
            }
        };
        let cap = copy(StateKind::Generation(r));
        let mut vars = Vec::with_capacity(n);
        for (h, phi) in factors.iter().enumerate() {
            let v =
                lp.add_variable(alloc::format!("g[{},{h}]", g.name), g.marginal_cost * PER_GWH, 0.0, f64::INFINITY)?;
            lp.add_row(
                alloc::format!("avail[{},{h}]", g.name),
                alloc::vec![(v, 1.0), (cap, -phi * dt)],
                Sense::Le,
                0.0,
            )?;
            vars.push(v);
        }
        generation.push(vars);
    }

    let h2 = catalog.hydrogen_storage();
    let mut discharge = Vec::new();
    let mut charge = Vec::new();
    let mut level = Vec::new();
    for (s, st) in catalog.storages.iter().enumerate() {
        let (fc, hc, ec) =
            (copy(StateKind::DischargePower(s)), copy(StateKind::ChargePower(s)), copy(StateKind::Energy(s)));
        let (mut fs, mut cs, mut es) = (Vec::new(), Vec::new(), Vec::new());
        for h in 0..n {
            let f = lp.add_variable(alloc::format!("f[{},{h}]", st.name), 0.0, 0.0, f64::INFINITY)?;
            let c = lp.add_variable(alloc::format!("h[{},{h}]", st.name), 0.0, 0.0, f64::INFINITY)?;
            let e = lp.add_variable(alloc::format!("e[{},{h}]", st.name), 0.0, 0.0, f64::INFINITY)?;
            lp.add_row(alloc::format!("fcap[{},{h}]", st.name), alloc::vec![(f, 1.0), (fc, -dt)], Sense::Le, 0.0)?;
            lp.add_row(alloc::format!("hcap[{},{h}]", st.name), alloc::vec![(c, 1.0), (hc, -dt)], Sense::Le, 0.0)?;
            lp.add_row(alloc::format!("ecap[{},{h}]", st.name), alloc::vec![(e, 1.0), (ec, -1.0)], Sense::Le, 0.0)?;
            fs.push(f);
            cs.push(c);
            es.push(e);
        }
        discharge.push(fs);
        charge.push(cs);
        level.push(es);
    }

    let shedding: Vec<VarId> = (0..n)
        .map(|h| lp.add_variable(alloc::format!("shed[{h}]"), config.scenario.voll * PER_GWH, 0.0, f64::INFINITY))
        .collect::<Result<_, _>>()?;

    let mut spot = Vec::new();
    let mut ltc = Vec::new();
    let mut spill = Vec::new();
    if h2.is_some() {
        if let Some(market) = &config.scenario.spot {
            let cap = market.cap_per_hour.map_or(f64::INFINITY, |c| c * dt);
            for h in 0..n {
                spot.push(lp.add_variable(alloc::format!("spot[{h}]"), market.price * PER_GWH, 0.0, cap)?);
            }
        }
        if catalog.ltc.max_volume > 0.0 {
            let vol = copy(StateKind::LtcVolume);
            let flex = catalog.ltc.flexibility;
            for h in 0..n {
                let q = lp.add_variable(alloc::format!("ltc[{h}]"), catalog.ltc.price * PER_GWH, 0.0, f64::INFINITY)?;
                lp.add_row(
                    alloc::format!("ltc_min[{h}]"),
                    alloc::vec![(q, 1.0), (vol, -(1.0 - flex))],
                    Sense::Ge,
                    0.0,
                )?;
                lp.add_row(
                    alloc::format!("ltc_max[{h}]"),
                    alloc::vec![(q, 1.0), (vol, -(1.0 + flex))],
                    Sense::Le,
                    0.0,
                )?;
                ltc.push(q);
                spill.push(lp.add_variable(alloc::format!("spill[{h}]"), 0.0, 0.0, f64::INFINITY)?);
            }
        }
    }

    let net_demand: Vec<f64> = (0..n).map(|h| xi.net_demand(h)).collect();
    let mut balance = Vec::with_capacity(n);
    for h in 0..n {
        let mut terms = Vec::new();
        for g in &generation {
            terms.push((g[h], 1.0));
        }
        for s in 0..catalog.storages.len() {
            terms.push((discharge[s][h], 1.0));
            terms.push((charge[s][h], -1.0));
        }
        terms.push((shedding[h], 1.0));
        balance.push(lp.add_row(alloc::format!("balance[{h}]"), terms, Sense::Eq, net_demand[h])?);
    }

    let mut storage_balance = Vec::new();
    for (s, st) in catalog.storages.iter().enumerate() {
        let mut rows = Vec::with_capacity(n);
        for h in 0..n {
            let mut terms = alloc::vec![
                (level[s][h], 1.0),
                (charge[s][h], -st.charge_efficiency),
                (discharge[s][h], 1.0 / st.discharge_efficiency),
            ];
            let previous = match (h, st.class) {
                (0, StorageClass::LongDuration) => copy(StateKind::Level(s)),
                (0, StorageClass::ShortDuration) => level[s][n - 1],
                _ => level[s][h - 1],
            };
            if previous != level[s][h] {
                terms.push((previous, -1.0));
            } else {
                // One-period circular storage: the level cancels out.
                terms.remove(0);
            }
            if h2 == Some(s) {
                if let Some(v) = spot.get(h) {
                    terms.push((*v, -1.0));
                }
                if let Some(v) = ltc.get(h) {
                    terms.push((*v, -1.0));
                    terms.push((spill[h], 1.0));
                }
            }
            rows.push(lp.add_row(alloc::format!("storage[{},{h}]", st.name), terms, Sense::Eq, 0.0)?);
        }
        storage_balance.push(rows);
    }

    let ending: Vec<VarId> = level.iter().map(|l| l[n - 1]).collect();
    let is_final = t == last;
    let shortfall = if is_final {
        terminal_penalty_rows(&mut lp, catalog, config.scenario.voll, &layout, &copies, &ending)?
    } else {
        alloc::vec![None; catalog.storages.len()]
    };
    let theta = if is_final { None } else { Some(lp.add_variable("theta", 1.0, 0.0, f64::INFINITY)?) };

    let outgoing = layout
        .kinds()
        .iter()
        .enumerate()
        .map(|(k, kind)| match *kind {
            StateKind::Level(s) => ending[s],
            _ => copies[k],
        })
        .collect();

    Ok(StageProblem {
        role: StageRole::Dispatch { stage: t, last },
        lp,
        outgoing,
        fishing,
        theta,
        incoming: None,
        dispatch: Some(DispatchIndex {
            periods: n,
            generation,
            discharge,
            charge,
            level,
            shedding,
            spot,
            ltc,
            spill,
            shortfall,
            balance,
            storage_balance,
            copies,
            level_coordinates: layout.level_coordinates(),
            net_demand,
        }),
        cut_rows: 0,
    })
}
