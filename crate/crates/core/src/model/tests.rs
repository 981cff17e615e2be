use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::instances::{tiny_config, tiny_lattice};
use crate::lp::{solve, LpStatus};

fn state(config: &ModelConfig, g: f64, power: f64, energy: f64, e_ini: f64, level: f64) -> StateVector {
    let layout = config.layout();
    StateVector(
        layout
            .kinds()
            .iter()
            .map(|k| match k {
                StateKind::Generation(_) => g,
                StateKind::DischargePower(_) | StateKind::ChargePower(_) => power,
                StateKind::Energy(_) => energy,
                StateKind::InitialLevel(_) => e_ini,
                StateKind::LtcVolume => 0.0,
                StateKind::Level(_) => level,
            })
            .collect(),
    )
}

fn solve_stage(p: &StageProblem) -> (crate::lp::LpSolution, DispatchSolution) {
    let sol = solve(&p.lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let d = p.dispatch_solution(&sol).unwrap();
    (sol, d)
}

fn single_generator(capital: f64, max: f64) -> TechnologyCatalog {
    TechnologyCatalog {
        generators: alloc::vec![Generator {
            name: "g".into(),
            capital_cost: capital,
            marginal_cost: 0.0,
            capacity: Bounds::up_to(max),
            availability: Availability::Constant(1.0),
        }],
        storages: Vec::new(),
        ltc: LtcContract::default(),
    }
}

#[test]
fn layout_order() {
    let layout = tiny_config().layout();
    let names: Vec<&str> = layout.names().iter().map(|s| s.as_str()).collect();
    assert_eq!(names, ["G[wind]", "F[h2]", "H[h2]", "E[h2]", "e_ini[h2]", "I_H2", "e[h2]"]);
}

#[test]
fn zero_cost_capacity_stage_sits_at_lower_bounds() {
    let mut cat = tiny_config().catalog;
    cat.generators[0].capital_cost = 0.0;
    cat.generators[0].capacity = Bounds::new(0.2, 1.0);
    let s = &mut cat.storages[0];
    s.discharge_cost = 0.0;
    s.charge_cost = 0.0;
    s.energy_cost = 0.0;
    let p = build_capacity_stage(&cat).unwrap();
    let sol = solve(&p.lp).unwrap();
    assert_eq!(sol.objective, 0.0);
    let x = p.extract_state(&sol).unwrap();
    assert_eq!(x.0, alloc::vec![0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn capacity_without_cuts_is_worthless() {
    let p = build_capacity_stage(&single_generator(1.0, 10.0)).unwrap();
    let sol = solve(&p.lp).unwrap();
    assert_eq!(sol.objective, 0.0);
    assert_eq!(sol.value(p.outgoing[0]), 0.0);
}

#[test]
fn capacity_stage_balances_capital_against_a_cut() {
    // c = 2e-6 EUR/kW-yr is 2 EUR/GW, below the cut slope of 5 EUR/GW.
    let mut p = build_capacity_stage(&single_generator(2e-6, 30.0)).unwrap();
    p.add_cut(100.0, &[-5.0, 0.0]).unwrap();
    let sol = solve(&p.lp).unwrap();
    // Oracle: scan c G + max(0, 100 - 5 G) over a fine grid.
    let (mut best_g, mut best) = (0.0, f64::INFINITY);
    for i in 0..=30_000 {
        let g = i as f64 * 1e-3;
        let v = 2.0 * g + f64::max(0.0, 100.0 - 5.0 * g);
        if v < best {
            best = v;
            best_g = g;
        }
    }
    assert!((sol.value(p.outgoing[0]) - best_g).abs() < 1e-9);
    assert!((sol.objective - best).abs() < 1e-9);
    assert!((sol.objective - 40.0).abs() < 1e-9);
}

#[test]
fn inconsistent_bounds_are_rejected() {
    let cat = single_generator(1.0, 10.0);
    let mut bad = cat.clone();
    bad.generators[0].capacity = Bounds::new(3.0, 1.0);
    assert!(matches!(build_capacity_stage(&bad), Err(ModelError::InconsistentBounds { .. })));
}

#[test]
fn validation_lists_every_violation() {
    let mut cat = tiny_config().catalog;
    cat.storages[0].discharge_efficiency = -0.4;
    cat.storages[0].charge_efficiency = 1.5;
    cat.generators[0].capital_cost = -1.0;
    let errs = cat.validate();
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs.iter().any(|e| alloc::format!("{e}").contains("storages.h2.discharge_efficiency")));
}

#[test]
fn heat_demand_enters_through_the_cop() {
    let config = tiny_config();
    let mut xi = WeatherVector::flat(2, 10.0, &[("wind", 0.5)]);
    xi.heat_demand = alloc::vec![6.0; 2];
    xi.cop = alloc::vec![3.0; 2];
    let p = build_dispatch_stage(1, 3, &config, &xi).unwrap();
    let d = p.dispatch.as_ref().unwrap();
    assert_eq!(d.net_demand, alloc::vec![12.0, 12.0]);
    assert_eq!(p.lp.row_data(d.balance[0]).rhs, 12.0);
}

#[test]
fn no_wind_and_no_storage_forces_shedding() {
    let config = tiny_config();
    let xi = WeatherVector::flat(4, 0.01, &[("wind", 0.0)]);
    let p = build_dispatch_stage(2, 3, &config, &xi)
        .unwrap()
        .apply_incoming_state(&state(&config, 1.0, 1.0, 0.0, 0.0, 0.0))
        .unwrap();
    let (sol, d) = solve_stage(&p);
    for h in 0..4 {
        assert!((d.shedding[h] - 0.01).abs() < 1e-12);
        assert!((d.prices[h] - Scenario::VOLL).abs() < 1e-6);
    }
    let expected = Scenario::VOLL * PER_GWH * 0.04;
    assert!((d.stage_cost - expected).abs() <= 1e-9 * expected);
    assert_eq!(d.cost_to_go, 0.0);
    assert!((sol.objective - expected).abs() <= 1e-9 * expected);
}

#[test]
fn empty_storage_cannot_discharge_first() {
    let config = tiny_config();
    let xi = WeatherVector::flat(4, 0.01, &[("wind", 0.0)]);
    let p = build_dispatch_stage(1, 3, &config, &xi)
        .unwrap()
        .apply_incoming_state(&state(&config, 1.0, 1.0, 1.0, 0.0, 0.0))
        .unwrap();
    let (_, d) = solve_stage(&p);
    assert_eq!(d.discharge[0][0], 0.0);
    assert!(d.shedding[0] > 0.0);
}

#[test]
fn doubling_generation_capacity_relaxes_the_stage() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    for t in 1..=3 {
        for node in lattice.nodes(t) {
            let p = build_dispatch_stage(t, 3, &config, &node.weather).unwrap();
            let lo = solve(&p.apply_incoming_state(&state(&config, 0.01, 0.01, 0.05, 0.02, 0.02)).unwrap().lp).unwrap();
            let hi = solve(&p.apply_incoming_state(&state(&config, 0.02, 0.01, 0.05, 0.02, 0.02)).unwrap().lp).unwrap();
            assert!(hi.objective <= lo.objective + 1e-9 * lo.objective.abs());
        }
    }
}

#[test]
fn fishing_dual_matches_finite_difference() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    let p = build_dispatch_stage(2, 3, &config, &lattice.nodes(2)[0].weather).unwrap();
    let x = state(&config, 0.02, 0.01, 0.05, 0.02, 0.0123);
    let k = config.layout().index_of(StateKind::Level(0)).unwrap();
    let sol = solve(&p.apply_incoming_state(&x).unwrap().lp).unwrap();
    let dual = sol.dual(p.fishing[k]);
    let delta = 1e-6;
    let mut up = x.clone();
    up[k] += delta;
    let mut down = x.clone();
    down[k] -= delta;
    let fu = solve(&p.apply_incoming_state(&up).unwrap().lp).unwrap().objective;
    let fd = solve(&p.apply_incoming_state(&down).unwrap().lp).unwrap().objective;
    let fdiff = (fu - fd) / (2.0 * delta);
    assert!(dual < 0.0, "more stored energy is worth something: {dual}");
    assert!((fdiff - dual).abs() <= 1e-5 * dual.abs(), "fd {fdiff} dual {dual}");
}

fn terminal_case(level_in: f64, e_ini: f64) -> DispatchSolution {
    let mut config = tiny_config();
    config.catalog.storages[0].charge_power = Bounds::fixed(0.0);
    let xi = WeatherVector::flat(2, 0.0, &[("wind", 0.0)]);
    let p = build_dispatch_stage(3, 3, &config, &xi)
        .unwrap()
        .apply_incoming_state(&state(&config, 0.0, 0.0, 10.0, e_ini, level_in))
        .unwrap();
    assert!(p.is_final() && p.theta.is_none());
    solve_stage(&p).1
}

#[test]
fn terminal_penalty_examples() {
    let met = terminal_case(5.0, 5.0);
    assert_eq!(met.terminal_shortfall, alloc::vec![0.0]);
    assert_eq!(met.stage_cost, 0.0);
    let short = terminal_case(4.0, 5.0);
    assert!((short.terminal_shortfall[0] - 1.0).abs() < 1e-12);
    assert!((short.stage_cost - 1e8).abs() <= 1e-9 * 1e8);
    let surplus = terminal_case(7.0, 5.0);
    assert_eq!(surplus.terminal_shortfall, alloc::vec![0.0]);
    assert_eq!(surplus.stage_cost, 0.0);
}

#[test]
fn extract_state_passes_capacities_through() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    let x = state(&config, 0.0213, 0.0071, 0.0523, 0.031, 0.0177);
    let p =
        build_dispatch_stage(1, 3, &config, &lattice.nodes(1)[1].weather).unwrap().apply_incoming_state(&x).unwrap();
    let (sol, d) = solve_stage(&p);
    let out = p.extract_state(&sol).unwrap();
    let k = config.layout().index_of(StateKind::Level(0)).unwrap();
    for i in 0..out.len() {
        if i != k {
            assert_eq!(out[i].to_bits(), x[i].to_bits());
        }
    }
    assert_eq!(out[k], *d.level[0].last().unwrap());
}

#[test]
fn plant_equation_chains_stages() {
    let config = tiny_config();
    let lattice = tiny_lattice();
    let s = &config.catalog.storages[0];
    let mut x = state(&config, 0.03, 0.01, 0.05, 0.02, 0.02);
    for t in 1..=3 {
        let p = build_dispatch_stage(t, 3, &config, &lattice.nodes(t)[0].weather)
            .unwrap()
            .apply_incoming_state(&x)
            .unwrap();
        let (sol, d) = solve_stage(&p);
        let k = config.layout().index_of(StateKind::Level(0)).unwrap();
        let residual =
            d.level[0][0] - x[k] - s.charge_efficiency * d.charge[0][0] + d.discharge[0][0] / s.discharge_efficiency;
        assert!(residual.abs() <= 1e-9, "{residual}");
        x = p.extract_state(&sol).unwrap();
    }
}

#[test]
fn stage_errors() {
    let config = tiny_config();
    let xi = WeatherVector::flat(4, 0.01, &[("wind", 0.5)]);
    assert_eq!(build_dispatch_stage(0, 3, &config, &xi).unwrap_err(), ModelError::UnknownStage { stage: 0, last: 3 });
    assert_eq!(build_dispatch_stage(4, 3, &config, &xi).unwrap_err(), ModelError::UnknownStage { stage: 4, last: 3 });
    let mut bad = xi.clone();
    bad.cop.pop();
    assert!(matches!(build_dispatch_stage(1, 3, &config, &bad), Err(ModelError::LengthMismatch(_))));
    let p = build_dispatch_stage(1, 3, &config, &xi).unwrap();
    assert_eq!(
        p.apply_incoming_state(&StateVector(alloc::vec![0.0; 3])).unwrap_err(),
        ModelError::DimensionMismatch { got: 3, expected: 7 }
    );
    let cap = build_capacity_stage(&config.catalog).unwrap();
    let infeasible = crate::lp::LpSolution {
        status: LpStatus::Infeasible,
        primal: Vec::new(),
        objective: 0.0,
        duals: Vec::new(),
        reduced_costs: Vec::new(),
        row_activity: Vec::new(),
        basis: None,
        iterations: 0,
    };
    assert_eq!(cap.extract_state(&infeasible).unwrap_err(), ModelError::NotOptimal);
}

#[test]
fn scenario_presets() {
    assert_eq!(Scenario::no_imports().voll, 100_000.0);
    assert!(Scenario::no_imports().spot.is_none());
    let c = Scenario::constrained_imports().spot.unwrap();
    assert_eq!((c.price, c.cap_per_hour), (250.0, Some(5.5)));
    assert_eq!(Scenario::unlimited_imports().spot.unwrap().cap_per_hour, None);
    assert_eq!(Scenario::preset("constrained_imports"), Some(Scenario::constrained_imports()));
    assert_eq!(Scenario::preset("other"), None);
}

#[test]
fn no_spot_variable_without_imports() {
    let config = tiny_config();
    let xi = WeatherVector::flat(4, 0.01, &[("wind", 0.5)]);
    let p = build_dispatch_stage(1, 3, &config, &xi).unwrap();
    assert!(p.lp.var("spot[0]").is_none());
    let mut with = config.clone();
    with.scenario = Scenario::constrained_imports();
    let p = build_dispatch_stage(1, 3, &with, &xi).unwrap();
    let v = p.lp.var("spot[0]").unwrap();
    assert_eq!(p.lp.upper_bounds()[v.0], 5.5);
}

fn arb_state() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.0..0.05f64, 0.0..0.02f64, 0.0..0.1f64, 0.0..1.0f64, 0.0..1.0f64)
        .prop_map(|(g, p, e, a, b)| (g, p, e, a * e, b * e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispatch_is_feasible_and_conserves_energy(
        (g, pw, e, e_ini, lvl) in arb_state(),
        t in 1usize..=3,
        node in 0usize..2,
        preset in prop::sample::select(alloc::vec!["no_imports", "constrained_imports", "unlimited_imports"]),
    ) {
        let mut config = tiny_config();
        config.scenario = Scenario::preset(preset).unwrap();
        let lattice = tiny_lattice();
        let x = state(&config, g, pw, e, e_ini, lvl);
        let p = build_dispatch_stage(t, 3, &config, &lattice.nodes(t)[node].weather).unwrap().apply_incoming_state(&x).unwrap();
        let sol = solve(&p.lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let d = p.dispatch_solution(&sol).unwrap();
        let idx = p.dispatch.as_ref().unwrap();
        for h in 0..idx.periods {
            let supply = d.generation[0][h] + d.discharge[0][h] - d.charge[0][h] + d.shedding[h];
            prop_assert!((supply - idx.net_demand[h]).abs() <= 1e-6);
            prop_assert!(d.level[0][h] >= -1e-9 && d.level[0][h] <= e + 1e-9);
            prop_assert!(d.discharge[0][h] >= -1e-9 && d.discharge[0][h] <= pw + 1e-9);
            prop_assert!(d.charge[0][h] >= -1e-9 && d.charge[0][h] <= pw + 1e-9);
        }
    }

    #[test]
    fn imports_never_raise_stage_cost(
        (g, pw, e, e_ini, lvl) in arb_state(),
        t in 1usize..=3,
        node in 0usize..2,
    ) {
        let lattice = tiny_lattice();
        let mut costs = Vec::new();
        for preset in ["no_imports", "constrained_imports", "unlimited_imports"] {
            let mut config = tiny_config();
            config.scenario = Scenario::preset(preset).unwrap();
            let x = state(&config, g, pw, e, e_ini, lvl);
            let p = build_dispatch_stage(t, 3, &config, &lattice.nodes(t)[node].weather).unwrap().apply_incoming_state(&x).unwrap();
            costs.push(solve(&p.lp).unwrap().objective);
        }
        prop_assert!(costs[0] >= costs[1] - 1e-9 * costs[0].abs());
        prop_assert!(costs[1] >= costs[2] - 1e-9 * costs[1].abs());
    }
}
