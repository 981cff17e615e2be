use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::benchmarks::cost_to_go;
use crate::instances::{tiny_config, tiny_lattice};
use crate::model::{Bounds, DispatchSolution, Scenario};
use crate::sddp::{simulate, train_with_clock, FrozenClock, StageRecord, TrainOptions};

fn trained_tiny(iterations: usize) -> Policy {
    let opts = TrainOptions { max_iterations: iterations, ..TrainOptions::default() };
    train_with_clock(&tiny_config(), &tiny_lattice(), &opts, &FrozenClock).unwrap()
}

fn record(stage: usize, incoming: Vec<f64>, dispatch: DispatchSolution) -> StageRecord {
    StageRecord {
        stage,
        node: Some(0),
        label: String::new(),
        incoming: StateVector(incoming),
        outgoing: StateVector::default(),
        dispatch: Some(dispatch),
        stage_cost: 0.0,
        cost_to_go: 0.0,
        fishing_duals: Vec::new(),
    }
}

fn with_levels(levels: &[f64]) -> Trajectory {
    let mut stages = vec![record(0, Vec::new(), DispatchSolution::default())];
    stages[0].dispatch = None;
    for (t, &e) in levels.iter().enumerate() {
        stages.push(record(t + 1, Vec::new(), DispatchSolution { level: vec![vec![0.0, e]], ..Default::default() }));
    }
    Trajectory { stages }
}

#[test]
fn worked_bid_examples() {
    let b = bid_conversion(100.0, 0.4, 0.7);
    assert!((b.discharge - 250.0).abs() < 1e-12 && (b.charge - 70.0).abs() < 1e-12);
    let b = bid_conversion(127.0, 0.4, 0.7);
    assert!((b.discharge - 317.5).abs() < 1e-12 && (b.charge - 88.9).abs() < 1e-12);
    assert_eq!(b.discharge.round(), 318.0);
    assert_eq!(b.charge.round(), 89.0);
    assert_eq!(bid_conversion(0.0, 0.5, 0.9), Bids { discharge: 0.0, charge: 0.0 });
}

#[test]
#[should_panic]
fn zero_efficiency_is_rejected() {
    bid_conversion(1.0, 0.0, 0.5);
}

#[test]
fn untrained_stage_has_no_curve() {
    let config = tiny_config();
    let mut policy = Policy::empty(3, config.layout().dim());
    let e = config.layout().index_of(StateKind::Energy(0)).unwrap();
    policy.capacities[e] = 1.0;
    assert_eq!(msv_curve(&config, &policy, 1, 0, 0.1), Err(AnalysisError::EmptyPool { stage: 1 }));
    assert!(matches!(msv_curve(&config, &policy, 4, 0, 0.1), Err(AnalysisError::UnknownStage { .. })));
    assert!(matches!(msv_curve(&config, &policy, 3, 0, 0.0), Err(AnalysisError::InvalidArgument(_))));
    policy.capacities[e] = 0.0;
    assert!(matches!(msv_curve(&config, &policy, 3, 0, 0.1), Err(AnalysisError::NoStorage(_))));
}

#[test]
fn final_stage_curve_is_the_terminal_step() {
    let config = tiny_config();
    let layout = config.layout();
    let mut policy = Policy::empty(3, layout.dim());
    policy.capacities[layout.index_of(StateKind::Energy(0)).unwrap()] = 1.0;
    policy.capacities[layout.index_of(StateKind::InitialLevel(0)).unwrap()] = 0.45;
    let curve = msv_curve(&config, &policy, 3, 0, 0.1).unwrap();
    assert_eq!(curve.levels.len(), 11);
    assert_eq!(*curve.levels.last().unwrap(), 1.0);
    for (e, m) in curve.levels.iter().zip(&curve.msv) {
        assert_eq!(*m, if *e < 0.45 { Scenario::VOLL } else { 0.0 });
    }
    assert_eq!(curve.discharge_bid[0], Scenario::VOLL / 0.5);
    assert_eq!(curve.charge_bid[0], Scenario::VOLL * 0.7);
}

#[test]
fn trained_curves_are_nonincreasing_and_nonnegative() {
    let config = tiny_config();
    let policy = trained_tiny(60);
    for t in 1..=3 {
        let curve = msv_curve(&config, &policy, t, 0, 0.002).unwrap();
        assert!(curve.msv.iter().all(|m| *m >= 0.0), "stage {t}: {:?}", curve.msv);
        for w in curve.msv.windows(2) {
            assert!(w[1] <= w[0], "stage {t}: {:?}", curve.msv);
        }
        assert!(curve.msv[0] >= *curve.msv.last().unwrap());
    }
}

#[test]
fn msv_matches_finite_differences_of_the_true_cost_to_go() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    let policy = trained_tiny(200);
    let layout = config.layout();
    let k = layout.index_of(StateKind::Level(0)).unwrap();
    let kcap = layout.index_of(StateKind::Energy(0)).unwrap();
    let h = 1e-5;
    let mut compared = 0;
    for t in 1..3 {
        for cut in policy.pools[t].iter().rev().take(20) {
            let x = StateVector(cut.trial.clone());
            if x[k] < 2.0 * h || x[k] > x[kcap] - 2.0 * h {
                continue;
            }
            let f = |e: f64| {
                let mut y = x.clone();
                y[k] = e;
                cost_to_go(&config, &lattice, t, &y).unwrap()
            };
            let (lo, mid, hi) = (f(x[k] - h), f(x[k]), f(x[k] + h));
            let (left, right) = ((mid - lo) / h, (hi - mid) / h);
            if (left - right).abs() > 1e-6 * left.abs().max(right.abs()).max(1.0) {
                continue;
            }
            // cuts are tight at their own trial point once converged
            if (cut.value(&x) - mid).abs() > 1e-6 * mid.abs().max(1.0) {
                continue;
            }
            let fd = -(left + right) / 2.0 / PER_GWH;
            let msv = msv_at(&config, &policy, t, 0, &x).unwrap();
            assert!((msv - fd).abs() <= 1e-4 * fd.abs().max(1e-3), "stage {t}: msv {msv} vs {fd}");
            compared += 1;
        }
    }
    assert!(compared > 0);
}

#[test]
fn duration_curve_examples() {
    let c = duration_curve(vec![3.0, 1.0, 2.0]);
    assert_eq!(c.prices, vec![3.0, 2.0, 1.0]);
    assert_eq!(c.shares, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    assert_eq!(c.distinct_levels(1.0, 3.0, 1e-9), 1);
    assert_eq!(c.distinct_levels(0.0, 10.0, 1e-9), 3);
}

#[test]
fn all_shedding_prices_are_flat_at_voll() {
    let mut config = tiny_config();
    config.catalog.generators[0].capacity = Bounds::fixed(0.0);
    config.catalog.storages[0].energy = Bounds::fixed(0.0);
    let lattice = tiny_lattice();
    let policy =
        train_with_clock(&config, &lattice, &TrainOptions { max_iterations: 2, ..Default::default() }, &FrozenClock)
            .unwrap();
    let paths: Vec<_> = lattice.all_paths().iter().map(|n| lattice.path(n)).collect();
    let curve = price_duration_curve(&simulate(&config, &lattice, &policy, &paths).unwrap());
    assert_eq!(curve.prices.len(), 8 * 12);
    assert!(curve.prices.iter().all(|p| (p - Scenario::VOLL).abs() < 1e-6 * Scenario::VOLL));
}

#[test]
fn stats_of_one_trajectory_collapse() {
    let stats = trajectory_stats(&[with_levels(&[0.3, 0.1, 0.5])], 0, 0.2).unwrap();
    assert_eq!(stats.len(), 3);
    for (s, dev) in stats.iter().zip([0.1, -0.1, 0.3]) {
        for v in [s.mean, s.p5, s.p25, s.p75, s.p95] {
            assert!((v - dev).abs() < 1e-12);
        }
    }
    let on_target = trajectory_stats(&[with_levels(&[0.2; 3]), with_levels(&[0.2; 3])], 0, 0.2).unwrap();
    assert!(on_target.iter().all(|s| [s.mean, s.p5, s.p25, s.p75, s.p95] == [0.0; 5]));
    assert!(trajectory_stats(&[], 0, 0.0).is_err());
}

#[test]
fn percentiles_interpolate_between_ranks() {
    let trajs: Vec<_> = (0..5).map(|i| with_levels(&[i as f64])).collect();
    let s = &trajectory_stats(&trajs, 0, 0.0).unwrap()[0];
    assert!((s.p5 - 0.2).abs() < 1e-12);
    assert!((s.p25 - 1.0).abs() < 1e-12);
    assert!((s.p75 - 3.0).abs() < 1e-12);
    assert!((s.p95 - 3.8).abs() < 1e-12);
    assert!((s.mean - 2.0).abs() < 1e-12);
}

fn synthetic_period(discharge: f64, charge: f64, price: f64, msv: f64) -> Trajectory {
    let config = tiny_config();
    let layout = config.layout();
    let mut incoming = vec![0.0; layout.dim()];
    incoming[layout.index_of(StateKind::DischargePower(0)).unwrap()] = 1.0;
    incoming[layout.index_of(StateKind::ChargePower(0)).unwrap()] = 1.0;
    let d = DispatchSolution {
        discharge: vec![vec![discharge]],
        charge: vec![vec![charge]],
        prices: vec![price],
        msv: vec![vec![msv]],
        ..Default::default()
    };
    Trajectory { stages: vec![record(0, Vec::new(), DispatchSolution::default()), record(1, incoming, d)] }
}

fn audit_with_eta_f(traj: &Trajectory, eta_f: f64) -> KktReport {
    let mut config = tiny_config();
    config.catalog.storages[0].discharge_efficiency = eta_f;
    kkt_audit(&config, traj)
}

#[test]
fn synthetic_bid_identity() {
    let ok = audit_with_eta_f(&synthetic_period(0.5, 0.0, 250.0, 100.0), 0.4);
    assert_eq!((ok.checked, ok.violations.len()), (1, 0));
    let bad = audit_with_eta_f(&synthetic_period(0.5, 0.0, 240.0, 100.0), 0.4);
    assert_eq!(bad.violations.len(), 1);
    assert_eq!(bad.violations[0].side, BidSide::Discharge);
    assert!((bad.violations[0].expected - 250.0).abs() < 1e-12);
    // full discharge is exempt whatever the price
    let full = audit_with_eta_f(&synthetic_period(1.0, 0.0, 900.0, 100.0), 0.4);
    assert!(full.passed());
    assert_eq!((full.checked, full.exempt), (0, 1));
    let charging = audit_with_eta_f(&synthetic_period(0.0, 0.3, 70.0, 100.0), 0.4);
    assert_eq!((charging.checked, charging.violations.len()), (1, 0));
}

#[test]
fn tiny_simulation_satisfies_every_bid_identity() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    let policy = trained_tiny(200);
    let paths: Vec<_> = lattice.all_paths().iter().map(|n| lattice.path(n)).collect();
    let mut report = KktReport::default();
    for traj in simulate(&config, &lattice, &policy, &paths).unwrap() {
        report.merge(kkt_audit(&config, &traj));
    }
    assert!(report.checked > 0);
    assert!(report.passed(), "{:?}", report.violations);
}

proptest! {
    #[test]
    fn duration_curves_are_nonincreasing(prices in proptest::collection::vec(-10.0f64..1e5, 1..50)) {
        let c = duration_curve(prices.clone());
        prop_assert_eq!(c.prices.len(), prices.len());
        for w in c.prices.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!((c.shares.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percentile_bands_are_ordered(levels in proptest::collection::vec(0.0f64..10.0, 1..30), ini in 0.0f64..10.0) {
        let trajs: Vec<_> = levels.iter().map(|e| with_levels(&[*e])).collect();
        let s = &trajectory_stats(&trajs, 0, ini).unwrap()[0];
        let lo = levels.iter().copied().fold(f64::INFINITY, f64::min) - ini;
        let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ini;
        prop_assert!(lo - 1e-12 <= s.p5 && s.p5 <= s.p25 && s.p25 <= s.p75 && s.p75 <= s.p95 && s.p95 <= hi + 1e-12);
        prop_assert!(s.mean >= lo - 1e-12 && s.mean <= hi + 1e-12);
    }
}
