//! Bidding curves, bid identities, storage trajectory statistics and price
//! duration curves derived from trained policies and simulations.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{ModelConfig, StateKind, StateVector, PER_GWH};
use crate::sddp::{Cut, Policy, Trajectory};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("stage {stage} has no cuts")]
    EmptyPool { stage: usize },
    #[error("stage {stage} is outside 1..={last}")]
    UnknownStage { stage: usize, last: usize },
    #[error("storage {0} has no energy capacity")]
    NoStorage(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Marginal storage value over a grid of levels at the end of a stage.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BidCurve {
    pub stage: usize,
    pub storage: String,
    /// GWh, ascending from 0 to the energy capacity.
    pub levels: Vec<f64>,
    /// EUR per MWh stored.
    pub msv: Vec<f64>,
    /// EUR per MWh of electricity.
    pub charge_bid: Vec<f64>,
    pub discharge_bid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bids {
    /// EUR per MWh of electricity.
    pub discharge: f64,
    pub charge: f64,
}

/// Electricity bids equivalent to a storage value: discharging pays off
/// above `msv / eta_f`, charging below `eta_h * msv`.
///
/// # Panics
/// If an efficiency is outside `(0, 1]`.
pub fn bid_conversion(msv: f64, eta_f: f64, eta_h: f64) -> Bids {
    assert!(eta_f > 0.0 && eta_f <= 1.0, "discharge efficiency {eta_f} outside (0, 1]");
    assert!(eta_h > 0.0 && eta_h <= 1.0, "charge efficiency {eta_h} outside (0, 1]");
    Bids { discharge: msv / eta_f, charge: eta_h * msv }
}

/// Index of the cut attaining the pool maximum at `x`, `None` when the
/// zero floor of the cost-to-go is higher. Near-ties go to the largest
/// slope in coordinate `k`, which keeps the result monotone along `k`.
fn active_cut(pool: &[Cut], x: &[f64], k: usize) -> Option<usize> {
    let values: Vec<f64> = pool.iter().map(|c| c.value(x)).collect();
    let top = values.iter().copied().fold(0.0, f64::max);
    let tol = 1e-9 * top.abs().max(1.0);
    let mut best: Option<usize> = None;
    let mut best_slope = 0.0;
    for (i, v) in values.iter().enumerate() {
        if *v >= top - tol {
            let s = pool[i].slope[k];
            if best.is_none() || s > best_slope {
                best = Some(i);
                best_slope = s;
            }
        }
    }
    // The floor is a cut with zero slope.
    match best {
        Some(_) if top.abs() <= tol && best_slope < 0.0 => None,
        b => b,
    }
}

/// Marginal storage value of storage `s` at the end of stage `t`, EUR per
/// MWh, at state `x`. Dispatch stages before the last read the maximum cut
/// of the next stage; the last stage applies the terminal rule `voll` below
/// the initial level and 0 at or above it.
pub fn msv_at(
    config: &ModelConfig,
    policy: &Policy,
    t: usize,
    s: usize,
    x: &StateVector,
) -> Result<f64, AnalysisError> {
    let last = policy.num_stages;
    if t == 0 || t > last {
        return Err(AnalysisError::UnknownStage { stage: t, last });
    }
    if x.len() != policy.state_dim {
        return Err(AnalysisError::InvalidArgument(alloc::format!(
            "state has {} coordinates, the policy {}",
            x.len(),
            policy.state_dim
        )));
    }
    let layout = config.layout();
    let k = layout
        .index_of(StateKind::Level(s))
        .ok_or_else(|| AnalysisError::InvalidArgument(alloc::format!("storage {s} has no carried level")))?;
    if t == last {
        let ini = layout.index_of(StateKind::InitialLevel(s)).map_or(0.0, |i| x[i]);
        return Ok(if x[k] < ini { config.scenario.voll } else { 0.0 });
    }
    let pool = &policy.pools[t];
    if pool.is_empty() {
        return Err(AnalysisError::EmptyPool { stage: t });
    }
    // `+ 0.0` turns a negated zero slope into positive zero.
    Ok(active_cut(pool, x, k).map_or(0.0, |i| -pool[i].slope[k] / PER_GWH + 0.0))
}

/// Bid curve of storage `s` at the end of stage `t`, with every other state
/// coordinate at the policy's capacity point.
pub fn msv_curve(
    config: &ModelConfig,
    policy: &Policy,
    t: usize,
    s: usize,
    grid_step: f64,
) -> Result<BidCurve, AnalysisError> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(AnalysisError::InvalidArgument(alloc::format!("grid step {grid_step} must be positive")));
    }
    let storage = config
        .catalog
        .storages
        .get(s)
        .ok_or_else(|| AnalysisError::InvalidArgument(alloc::format!("no storage {s}")))?;
    let layout = config.layout();
    let (Some(ke), Some(kl)) = (layout.index_of(StateKind::Energy(s)), layout.index_of(StateKind::Level(s))) else {
        return Err(AnalysisError::InvalidArgument(alloc::format!("storage {} has no carried level", storage.name)));
    };
    let cap = policy.capacities.get(ke).copied().unwrap_or(0.0);
    if cap <= 0.0 {
        return Err(AnalysisError::NoStorage(storage.name.clone()));
    }
    let mut levels = Vec::new();
    let mut i = 0usize;
    loop {
        let e = i as f64 * grid_step;
        if e >= cap * (1.0 - 1e-12) {
            levels.push(cap);
            break;
        }
        levels.push(e);
        i += 1;
    }
    let mut x = policy.capacities.clone();
    let mut msv = Vec::with_capacity(levels.len());
    for &e in &levels {
        x[kl] = e;
        msv.push(msv_at(config, policy, t, s, &x)?);
    }
    let bids: Vec<Bids> =
        msv.iter().map(|m| bid_conversion(*m, storage.discharge_efficiency, storage.charge_efficiency)).collect();
    Ok(BidCurve {
        stage: t,
        storage: storage.name.clone(),
        levels,
        msv,
        charge_bid: bids.iter().map(|b| b.charge).collect(),
        discharge_bid: bids.iter().map(|b| b.discharge).collect(),
    })
}

/// Prices sorted high to low with the cumulative share of periods.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DurationCurve {
    /// EUR per MWh of electricity, nonincreasing.
    pub prices: Vec<f64>,
    /// Share of periods priced at or above `prices[k]`, in `(0, 1]`.
    pub shares: Vec<f64>,
}

impl DurationCurve {
    /// Number of separate price levels strictly between `low` and `high`,
    /// merging prices within `tol` relative of each other.
    pub fn distinct_levels(&self, low: f64, high: f64, tol: f64) -> usize {
        let mut count = 0;
        let mut last: Option<f64> = None;
        for &p in self.prices.iter().filter(|p| **p > low && **p < high) {
            if last.is_none_or(|q| (q - p).abs() > tol * q.abs().max(1.0)) {
                count += 1;
                last = Some(p);
            }
        }
        count
    }
}

/// Duration curve of equally long periods.
pub fn duration_curve(mut prices: Vec<f64>) -> DurationCurve {
    prices.sort_by(|a, b| b.total_cmp(a));
    let n = prices.len() as f64;
    let shares = (1..=prices.len()).map(|k| k as f64 / n).collect();
    DurationCurve { prices, shares }
}

/// Duration curve over every dispatch period of every trajectory.
pub fn price_duration_curve(trajectories: &[Trajectory]) -> DurationCurve {
    duration_curve(
        trajectories
            .iter()
            .flat_map(|t| t.stages.iter().filter_map(|s| s.dispatch.as_ref()))
            .flat_map(|d| d.prices.iter().copied())
            .collect(),
    )
}

/// Distribution of the end-of-stage deviation from the initial level, GWh.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageStats {
    pub stage: usize,
    pub mean: f64,
    pub p5: f64,
    pub p25: f64,
    pub p75: f64,
    pub p95: f64,
    /// End-of-stage level of each trajectory, GWh.
    pub levels: Vec<f64>,
}

/// Linear interpolation between closest ranks of sorted data.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per dispatch stage: mean and 5/25/75/95 percentiles of
/// `e_{s,t,H} - e_ini` across trajectories.
pub fn trajectory_stats(trajectories: &[Trajectory], s: usize, e_ini: f64) -> Result<Vec<StageStats>, AnalysisError> {
    let Some(first) = trajectories.first() else {
        return Err(AnalysisError::InvalidArgument("no trajectories".into()));
    };
    let stages = first.stages.len();
    if trajectories.iter().any(|t| t.stages.len() != stages) {
        return Err(AnalysisError::InvalidArgument("trajectories differ in length".into()));
    }
    (1..stages)
        .map(|t| {
            let levels = trajectories
                .iter()
                .map(|tr| {
                    tr.stages[t]
                        .dispatch
                        .as_ref()
                        .and_then(|d| d.level.get(s))
                        .and_then(|l| l.last().copied())
                        .ok_or_else(|| {
                            AnalysisError::InvalidArgument(alloc::format!("stage {t} has no level for storage {s}"))
                        })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let mut dev: Vec<f64> = levels.iter().map(|e| e - e_ini).collect();
            dev.sort_by(f64::total_cmp);
            Ok(StageStats {
                stage: t,
                mean: dev.iter().sum::<f64>() / dev.len() as f64,
                p5: percentile(&dev, 0.05),
                p25: percentile(&dev, 0.25),
                p75: percentile(&dev, 0.75),
                p95: percentile(&dev, 0.95),
                levels,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BidSide {
    Discharge,
    Charge,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktViolation {
    pub stage: usize,
    pub period: usize,
    pub storage: usize,
    pub side: BidSide,
    /// EUR per MWh of electricity.
    pub price: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktReport {
    /// Interior dispatch decisions whose bid identity was checked.
    pub checked: usize,
    /// Decisions at zero or at their power limit.
    pub exempt: usize,
    pub violations: Vec<KktViolation>,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: KktReport) {
        self.checked += other.checked;
        self.exempt += other.exempt;
        self.violations.extend(other.violations);
    }
}

/// Relative tolerance of the bid identities.
pub const KKT_TOL: f64 = 1e-5;
/// Dispatch within this many GWh of a bound counts as at the bound.
const BOUND_TOL: f64 = 1e-7;

/// Checks `price = msv / eta_f` in every period where a storage discharges
/// strictly inside its power limit, and `price = eta_h msv` where it
/// charges strictly inside, using the period's own storage dual.
pub fn kkt_audit(config: &ModelConfig, trajectory: &Trajectory) -> KktReport {
    let layout = config.layout();
    let dt = config.period_hours;
    let mut report = KktReport::default();
    for rec in trajectory.stages.iter().skip(1) {
        let Some(d) = rec.dispatch.as_ref() else { continue };
        for (s, st) in config.catalog.storages.iter().enumerate() {
            let cap = |kind| layout.index_of(kind).and_then(|i| rec.incoming.get(i).copied()).unwrap_or(0.0) * dt;
            let sides = [
                (BidSide::Discharge, &d.discharge[s], cap(StateKind::DischargePower(s)), 1.0 / st.discharge_efficiency),
                (BidSide::Charge, &d.charge[s], cap(StateKind::ChargePower(s)), st.charge_efficiency),
            ];
            for (side, flows, limit, factor) in sides {
                for (h, &q) in flows.iter().enumerate() {
                    if q <= BOUND_TOL || q >= limit - BOUND_TOL {
                        if q > BOUND_TOL {
                            report.exempt += 1;
                        }
                        continue;
                    }
                    report.checked += 1;
                    let expected = factor * d.msv[s][h];
                    let price = d.prices[h];
                    if (price - expected).abs() > KKT_TOL * price.abs().max(expected.abs()).max(1.0) {
                        report.violations.push(KktViolation {
                            stage: rec.stage,
                            period: h,
                            storage: s,
                            side,
                            price,
                            expected,
                        });
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests;
