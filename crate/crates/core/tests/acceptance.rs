//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p ldes-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use ldes_core::analysis::{
    bid_conversion, duration_curve, kkt_audit, msv_curve, price_duration_curve, trajectory_stats,
};
use ldes_core::benchmarks::{cost_to_go, extensive_form, perfect_foresight, single_year_deterministic};
use ldes_core::instances::{stockpiling_config, stockpiling_lattice, tiny_config, tiny_lattice};
use ldes_core::model::StateKind;
use ldes_core::sddp::{simulate, train, upper_bound_estimate, Sddp, TrainOptions};
use ldes_core::weather::{acf_from_stage_means, path_count, path_count_f64, WeatherPath};
use ldes_core::{KktReport, ModelConfig, Policy, SamplingLattice, Scenario, StateVector, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<(bool, String), String>;
/// A trained policy kept for the later criteria, labelled by scenario.
type Trained = (String, ModelConfig, Policy);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn all_paths(lattice: &SamplingLattice) -> Vec<WeatherPath> {
    lattice.all_paths().iter().map(|n| lattice.path(n)).collect()
}

fn mean_cost(trajs: &[Trajectory]) -> f64 {
    trajs.iter().map(Trajectory::total_cost).sum::<f64>() / trajs.len() as f64
}

/// A random state with every level inside its sampled energy capacity.
fn sample_state(config: &ModelConfig, rng: &mut ChaCha8Rng) -> StateVector {
    let layout = config.layout();
    let mut x = StateVector(vec![0.0; layout.dim()]);
    let mut energy = 0.0;
    for (k, kind) in layout.kinds().iter().enumerate() {
        x[k] = match *kind {
            StateKind::Generation(r) => rng.gen_range(0.0..config.catalog.generators[r].capacity.max),
            StateKind::DischargePower(s) => rng.gen_range(0.0..config.catalog.storages[s].discharge_power.max),
            StateKind::ChargePower(s) => rng.gen_range(0.0..config.catalog.storages[s].charge_power.max),
            // E precedes the levels of its storage in the layout.
            StateKind::Energy(s) => {
                energy = rng.gen_range(0.0..config.catalog.storages[s].energy.max);
                energy
            }
            StateKind::InitialLevel(_) | StateKind::Level(_) => rng.gen_range(0.0..=energy),
            StateKind::LtcVolume => 0.0,
        };
    }
    x
}

struct Tiny {
    config: ModelConfig,
    lattice: SamplingLattice,
    policy: Policy,
    oracle: f64,
    seconds: f64,
}

impl Tiny {
    fn build() -> Result<Self, String> {
        let config = tiny_config();
        let lattice = tiny_lattice();
        let oracle = extensive_form(&config, &lattice).map_err(|e| e.to_string())?.objective;
        let start = Instant::now();
        let policy = train(&config, &lattice, &TrainOptions::default()).map_err(|e| e.to_string())?;
        Ok(Self { config, lattice, policy, oracle, seconds: start.elapsed().as_secs_f64() })
    }

    fn simulate_all(&self) -> Result<Vec<Trajectory>, String> {
        simulate(&self.config, &self.lattice, &self.policy, &all_paths(&self.lattice)).map_err(|e| e.to_string())
    }
}

fn oracle_equivalence(tiny: &Tiny) -> Outcome {
    let hit = tiny.policy.log.iter().find(|r| rel(r.lower_bound, tiny.oracle) <= 1e-4);
    let last = tiny.policy.log.last().ok_or("no iterations logged")?.lower_bound;
    Ok(match hit {
        Some(r) => (
            r.iteration <= 200 && tiny.seconds <= 60.0,
            format!(
                "LB {:.6} vs extensive form {:.6} at iteration {}, {:.2} s for 200 iterations",
                r.lower_bound, tiny.oracle, r.iteration, tiny.seconds
            ),
        ),
        None => (false, format!("final LB {last:.6} vs extensive form {:.6}", tiny.oracle)),
    })
}

/// Every cut of a pool is checked at the pool's shared probes, so each cut
/// sees `PROBES` random states.
const PROBES: usize = 500;

fn cut_validity(tiny: &Tiny) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut cuts = 0;
    for pool in tiny.policy.pools.iter().filter(|p| !p.is_empty()) {
        cuts += pool.len();
        for _ in 0..PROBES {
            let x = sample_state(&tiny.config, &mut rng);
            let truth = cost_to_go(&tiny.config, &tiny.lattice, pool[0].stage - 1, &x).map_err(|e| e.to_string())?;
            for cut in pool {
                worst = worst.max(cut.value(&x) - truth);
            }
        }
    }
    Ok((
        cuts > 0 && worst <= 1e-6,
        format!("{cuts} cuts, {PROBES} probes per cut, max cut minus cost-to-go {worst:.3e}"),
    ))
}

fn bound_ordering(tiny: &Tiny) -> Outcome {
    let lbs: Vec<f64> = tiny.policy.log.iter().map(|r| r.lower_bound).collect();
    let drop = lbs.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    let lb = *lbs.last().ok_or("no iterations logged")?;
    let ub = upper_bound_estimate(&tiny.config, &tiny.lattice, &tiny.policy, 200, 17).map_err(|e| e.to_string())?;
    let ok = drop <= 1e-9 * lb.abs().max(1.0) && lb <= ub.mean + 2.0 * ub.std_error;
    Ok((ok, format!("largest LB decrease {drop:.3e}; LB {lb:.3} <= UB {:.3} + 2 x {:.3}", ub.mean, ub.std_error)))
}

fn kkt_identity(tiny: &Tiny) -> Outcome {
    let mut report = KktReport::default();
    for traj in tiny.simulate_all()? {
        report.merge(kkt_audit(&tiny.config, &traj));
    }
    let bids = bid_conversion(100.0, 0.4, 0.7);
    let ok = report.checked > 0 && report.passed() && bids.discharge == 250.0 && bids.charge == 70.0;
    Ok((
        ok,
        format!(
            "{} identities checked, {} exempt, {} violations; MSV 100 bids {}/{}",
            report.checked,
            report.exempt,
            report.violations.len(),
            bids.discharge,
            bids.charge
        ),
    ))
}

fn terminal_step(policies: &[(&str, &ModelConfig, &Policy)]) -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, config, policy) in policies {
        let layout = config.layout();
        for s in 0..config.catalog.storages.len() {
            let ini = policy.capacities[layout.index_of(StateKind::InitialLevel(s)).ok_or("no initial level")?] + 0.0;
            let e_max = policy.capacities[layout.index_of(StateKind::Energy(s)).ok_or("no energy capacity")?];
            let curve = msv_curve(config, policy, policy.num_stages, s, e_max / 400.0).map_err(|e| e.to_string())?;
            let exact = curve
                .levels
                .iter()
                .zip(&curve.msv)
                .all(|(e, m)| *m == if *e < ini { config.scenario.voll } else { 0.0 });
            let below = curve.levels.iter().filter(|e| **e < ini).count();
            ok &= exact;
            notes.push(format!("{name}: e_ini {ini:.4}, {below}/{} grid levels below", curve.levels.len()));
        }
    }
    Ok((ok, notes.join("; ")))
}

fn curves_nonincreasing(policies: &[(&str, &ModelConfig, &Policy)]) -> Outcome {
    let mut curves = 0;
    for (name, config, policy) in policies {
        let layout = config.layout();
        for s in 0..config.catalog.storages.len() {
            let e_max = policy.capacities[layout.index_of(StateKind::Energy(s)).ok_or("no energy capacity")?];
            for t in 1..=policy.num_stages {
                let curve = msv_curve(config, policy, t, s, e_max / 400.0).map_err(|e| e.to_string())?;
                if let Some(w) = curve.msv.windows(2).find(|w| w[1] > w[0]) {
                    return Ok((false, format!("{name} stage {t}: MSV rises from {} to {}", w[0], w[1])));
                }
                curves += 1;
            }
        }
    }
    Ok((curves > 0, format!("{curves} curves checked on a 401-point grid")))
}

fn foresight_ordering(tiny: &Tiny) -> Outcome {
    let paths = all_paths(&tiny.lattice);
    let lf = mean_cost(&tiny.simulate_all()?);
    let pf = perfect_foresight(&tiny.config, &paths).map_err(|e| e.to_string())?.objective;
    let mut single = 0.0;
    for p in &paths {
        single += single_year_deterministic(&tiny.config, p).map_err(|e| e.to_string())?.objective;
    }
    single /= paths.len() as f64;
    let ok = pf <= lf * (1.0 + 1e-6) && single <= pf * (1.0 + 1e-6);
    Ok((ok, format!("single-year mean {single:.3} <= PF {pf:.3} <= LF {lf:.3} over {} paths", paths.len())))
}

fn stockpiling() -> Result<((bool, String), Trained), String> {
    let config = stockpiling_config();
    let lattice = stockpiling_lattice();
    let opts = TrainOptions { max_iterations: 300, ..TrainOptions::default() };
    let policy = train(&config, &lattice, &opts).map_err(|e| e.to_string())?;
    let paths = all_paths(&lattice);
    let sims = simulate(&config, &lattice, &policy, &paths).map_err(|e| e.to_string())?;
    let k = config.layout().index_of(StateKind::InitialLevel(0)).ok_or("no initial level")?;
    let lf_dev = trajectory_stats(&sims, 0, policy.capacities[k]).map_err(|e| e.to_string())?[1].mean;

    let pf = perfect_foresight(&config, &paths).map_err(|e| e.to_string())?;
    let ini = pf.capacities[k];
    let end_of_stage_2 =
        |s: &ldes_core::benchmarks::ScenarioSummary| s.stages[1].level[0].last().copied().unwrap_or(ini);
    let pf_dev = pf.scenarios.iter().map(|s| s.probability * (end_of_stage_2(s) - ini)).sum::<f64>();

    let v = config.scenario.voll;
    let lf_levels = price_duration_curve(&sims).distinct_levels(1e-6, v * (1.0 - 1e-9), 1e-6);
    let pf_levels = duration_curve(pf.scenarios.iter().flat_map(|s| s.prices()).collect()).distinct_levels(
        1e-6,
        v * (1.0 - 1e-9),
        1e-6,
    );
    let ok = lf_dev > pf_dev && lf_levels >= 3 && pf_levels <= 2;
    let report = format!(
        "end-of-stage-2 deviation LF {:.2} MWh vs PF {:.2} MWh; interior price levels LF {lf_levels} vs PF {pf_levels}",
        lf_dev * 1e3,
        pf_dev * 1e3
    );
    Ok(((ok, report), ("stockpiling".into(), config, policy)))
}

fn scenario_monotonicity(tiny: &Tiny) -> Result<((bool, String), Vec<Trained>), String> {
    let paths = all_paths(&tiny.lattice);
    let mut costs = Vec::new();
    let mut policies = Vec::new();
    for scenario in [Scenario::no_imports(), Scenario::constrained_imports(), Scenario::unlimited_imports()] {
        let mut config = tiny.config.clone();
        config.scenario = scenario;
        let opts = TrainOptions { fixed_capacities: Some(tiny.policy.capacities.clone()), ..TrainOptions::default() };
        let policy = train(&config, &tiny.lattice, &opts).map_err(|e| e.to_string())?;
        let sims = simulate(&config, &tiny.lattice, &policy, &paths).map_err(|e| e.to_string())?;
        costs.push(mean_cost(&sims));
        policies.push((config.scenario.name.clone(), config, policy));
    }
    let (no, constrained, unlimited) = (costs[0], costs[1], costs[2]);
    let ok = no >= constrained * (1.0 - 1e-9) && constrained >= unlimited * (1.0 - 1e-9);
    Ok(((ok, format!("No {no:.3} >= Constrained {constrained:.3} >= Unlimited {unlimited:.3}")), policies))
}

fn as_table(x: &[f64], stages: usize) -> Vec<Vec<f64>> {
    x.chunks(stages).map(<[f64]>::to_vec).collect()
}

fn acf_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    let mut ar = vec![0.0; noise.len()];
    for t in 1..noise.len() {
        ar[t] = 0.8 * ar[t - 1] + noise[t];
    }
    let rho1 = acf_from_stage_means("ar1", &as_table(&ar, 10), 12).map_err(|e| e.to_string())?.rho[0];
    let white: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    let iid = acf_from_stage_means("iid", &as_table(&white, 10), 12).map_err(|e| e.to_string())?;
    let outside = iid.rho.iter().filter(|r| r.abs() > iid.band).count();
    let seconds = start.elapsed().as_secs_f64();
    let ok = (0.75..=0.85).contains(&rho1) && outside <= 2 && seconds < 5.0;
    Ok((ok, format!("AR(1) rho_1 {rho1:.4}; iid lags outside +-{:.3}: {outside}/12; {seconds:.3} s", iid.band)))
}

/// Residuals of every simulated period against the balance, the bounds and
/// the level carried in from the previous stage.
fn conservation(config: &ModelConfig, paths: &[WeatherPath], trajs: &[Trajectory]) -> Result<(f64, f64, f64), String> {
    let layout = config.layout();
    let dt = config.period_hours;
    let (mut balance, mut bounds, mut continuity) = (0.0f64, 0.0f64, 0.0f64);
    let idx = |kind| layout.index_of(kind).ok_or_else(|| format!("no coordinate {kind:?}"));
    for (path, traj) in paths.iter().zip(trajs) {
        let x = traj.capacities();
        for t in 1..traj.stages.len() {
            let rec = &traj.stages[t];
            let d = rec.dispatch.as_ref().ok_or("stage without dispatch")?;
            let xi = &path.weather[t - 1];
            for h in 0..xi.periods() {
                let mut supply = d.shedding[h];
                for (r, g) in config.catalog.generators.iter().enumerate() {
                    let gen = d.generation[r][h];
                    supply += gen;
                    let cf = match &g.availability {
                        ldes_core::model::Availability::Constant(phi) => *phi,
                        ldes_core::model::Availability::Weather => xi.capacity_factors[&g.name][h],
                    };
                    bounds = bounds.max(-gen).max(gen - cf * x[idx(StateKind::Generation(r))?] * dt);
                }
                for s in 0..config.catalog.storages.len() {
                    supply += d.discharge[s][h] - d.charge[s][h];
                }
                balance = balance.max((supply - xi.net_demand(h)).abs());
            }
            for (s, st) in config.catalog.storages.iter().enumerate() {
                let k = idx(StateKind::Level(s))?;
                let (f_max, h_max, e_max) = (
                    x[idx(StateKind::DischargePower(s))?] * dt,
                    x[idx(StateKind::ChargePower(s))?] * dt,
                    x[idx(StateKind::Energy(s))?],
                );
                for h in 0..xi.periods() {
                    let (f, c, e) = (d.discharge[s][h], d.charge[s][h], d.level[s][h]);
                    bounds = bounds.max(-f).max(-c).max(-e).max(f - f_max).max(c - h_max).max(e - e_max);
                }
                if st.class == ldes_core::model::StorageClass::LongDuration {
                    let imports = if config.catalog.hydrogen_storage() == Some(s) {
                        d.spot_imports.first().copied().unwrap_or(0.0) + d.ltc_offtake.first().copied().unwrap_or(0.0)
                            - d.h2_spill.first().copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    let carried = traj.stages[t - 1].outgoing[k];
                    let first = rec.incoming[k] + st.charge_efficiency * d.charge[s][0]
                        - d.discharge[s][0] / st.discharge_efficiency
                        + imports;
                    let last = *d.level[s].last().ok_or("stage without periods")?;
                    continuity = continuity
                        .max((rec.incoming[k] - carried).abs())
                        .max((d.level[s][0] - first).abs())
                        .max((rec.outgoing[k] - last).abs());
                }
            }
        }
    }
    Ok((balance, bounds, continuity))
}

fn dispatch_conservation(runs: &[(&ModelConfig, &SamplingLattice, &Policy)]) -> Outcome {
    let (mut balance, mut bounds, mut continuity, mut stages) = (0.0f64, 0.0f64, 0.0f64, 0);
    for (config, lattice, policy) in runs {
        let paths = all_paths(lattice);
        let trajs = simulate(config, lattice, policy, &paths).map_err(|e| e.to_string())?;
        let (b, v, c) = conservation(config, &paths, &trajs)?;
        balance = balance.max(b);
        bounds = bounds.max(v);
        continuity = continuity.max(c);
        stages += trajs.iter().map(|t| t.stages.len() - 1).sum::<usize>();
    }
    let ok = balance <= 1e-6 && bounds <= 1e-9 && continuity <= 1e-9;
    Ok((
        ok,
        format!("{stages} stages: balance {balance:.2e} GWh, bound excess {bounds:.2e}, continuity {continuity:.2e}"),
    ))
}

fn dual_check(tiny: &Tiny) -> Outcome {
    let engine = Sddp::with_policy(&tiny.config, &tiny.lattice, &tiny.policy).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-6;
    let (mut accepted, mut drawn, mut worst, mut largest) = (0, 0, 0.0f64, 0.0f64);
    while accepted < 20 && drawn < 2000 {
        drawn += 1;
        let t = rng.gen_range(1..=engine.num_stages());
        let node = rng.gen_range(0..tiny.lattice.nodes(t).len());
        let x = sample_state(&tiny.config, &mut rng);
        let solve = |y: &StateVector| engine.solve_child(t, node, y).map(|r| r.0).map_err(|e| e.to_string());
        let (mid, duals) = engine.solve_child(t, node, &x).map_err(|e| e.to_string())?;
        let mut slopes = Vec::with_capacity(x.len());
        let mut smooth = true;
        for k in 0..x.len() {
            let step = h * x[k].abs().max(1e-3);
            let (mut lo, mut hi) = (x.clone(), x.clone());
            lo[k] -= step;
            hi[k] += step;
            let (Ok(f_lo), Ok(f_hi)) = (solve(&lo), solve(&hi)) else {
                smooth = false;
                break;
            };
            let (left, right) = ((mid - f_lo) / step, (f_hi - mid) / step);
            // A kink within the step shows as unequal one-sided slopes.
            if (left - right).abs() > 1e-7 * left.abs().max(right.abs()).max(1.0) {
                smooth = false;
                break;
            }
            slopes.push((f_hi - f_lo) / (2.0 * step));
        }
        if !smooth {
            continue;
        }
        accepted += 1;
        for (d, s) in duals.iter().zip(&slopes) {
            let excess = (d - s).abs() / (1e-5 * s.abs()).max(1e-7);
            worst = worst.max(excess);
            largest = largest.max(d.abs());
        }
    }
    Ok((
        accepted == 20 && worst <= 1.0,
        format!("{accepted} smooth probes of {drawn} drawn; largest |dual| {largest:.3e}, worst error {worst:.2e} x tolerance"),
    ))
}

fn lattice_arithmetic() -> Outcome {
    let small = path_count(&[4; 12]);
    let large = path_count(&[35; 12]);
    let large_f = path_count_f64(&[35; 12]);
    let ok = small == Some(16_777_216) && large == Some(35u128.pow(12)) && (large_f / 3.38e18 - 1.0).abs() < 5e-3;
    Ok((ok, format!("4^12 = {small:?}, 35^12 = {large:?} ({large_f:.4e})")))
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, id: usize, name: &str, check: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            self.failed += 1;
        }
        let seconds = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {name}: {detail} [{seconds:.1} s]", if pass { "PASS" } else { "FAIL" });
    }
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };
    let tiny = match Tiny::build() {
        Ok(t) => Some(t),
        Err(e) => {
            eprintln!("tiny instance failed to train: {e}");
            None
        }
    };
    let (stock, stock_policy) = match stockpiling() {
        Ok((o, p)) => (Ok(o), Some(p)),
        Err(e) => (Err(e), None),
    };
    let (scenarios, scenario_policies) = match tiny.as_ref().map(scenario_monotonicity) {
        Some(Ok((o, p))) => (Ok(o), p),
        Some(Err(e)) => (Err(e), Vec::new()),
        None => (Err("tiny instance unavailable".into()), Vec::new()),
    };
    let with_tiny = |f: fn(&Tiny) -> Outcome| tiny.as_ref().map_or(Err("tiny instance unavailable".into()), f);

    let mut trained: Vec<(&str, &ModelConfig, &Policy)> = Vec::new();
    if let Some(t) = &tiny {
        trained.push(("tiny", &t.config, &t.policy));
    }
    if let Some((name, c, p)) = &stock_policy {
        trained.push((name, c, p));
    }
    for (name, c, p) in &scenario_policies {
        trained.push((name, c, p));
    }
    let stock_lattice = stockpiling_lattice();
    let mut runs: Vec<(&ModelConfig, &SamplingLattice, &Policy)> = Vec::new();
    if let Some(t) = &tiny {
        runs.push((&t.config, &t.lattice, &t.policy));
        for (_, c, p) in &scenario_policies {
            runs.push((c, &t.lattice, p));
        }
    }
    if let Some((_, c, p)) = &stock_policy {
        runs.push((c, &stock_lattice, p));
    }

    gate.report(1, "oracle equivalence", || with_tiny(oracle_equivalence));
    gate.report(2, "cut validity", || with_tiny(cut_validity));
    gate.report(3, "bound ordering", || with_tiny(bound_ordering));
    gate.report(4, "KKT bid identity", || with_tiny(kkt_identity));
    gate.report(5, "terminal MSV step", || terminal_step(&trained));
    gate.report(6, "bid curves nonincreasing", || curves_nonincreasing(&trained));
    gate.report(7, "foresight ordering", || with_tiny(foresight_ordering));
    gate.report(8, "stockpiling", || stock);
    gate.report(9, "scenario monotonicity", || scenarios);
    gate.report(10, "ACF correctness", acf_correctness);
    gate.report(11, "dispatch conservation", || dispatch_conservation(&runs));
    gate.report(12, "fishing duals", || with_tiny(dual_check));
    gate.report(13, "lattice arithmetic", lattice_arithmetic);

    if gate.failed == 0 {
        println!("all 13 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} of 13 criteria failed", gate.failed);
        ExitCode::FAILURE
    }
}
