//! The subcommands. Each loads and validates the configuration, writes the
//! provenance files into the output directory, then runs on a thread pool
//! of the configured size.

use std::path::{Path, PathBuf};

use ldes_core::analysis::{kkt_audit, msv_curve, price_duration_curve, trajectory_stats};
use ldes_core::benchmarks::{extensive_form, perfect_foresight, single_year_deterministic};
use ldes_core::model::StateKind;
use ldes_core::sddp::{self, StopRule, Termination, TrainOptions, TrustRegion};
use ldes_core::weather::acf_test;
use ldes_core::{
    AnalysisError, BenchmarkError, BenchmarkResult, KktReport, ModelConfig, Policy, SamplingLattice, SddpError,
    Trajectory,
};

use crate::config::{validate_config, Overrides, Settings, WeatherSource};
use crate::data::{load_lattice, load_series, select_paths};
use crate::error::CliError;
use crate::output::{create_dir, num, write_csv, write_provenance};
use crate::policy_file::{PolicyFile, POLICY_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Train,
    Simulate,
    Bench,
    Acf,
    Curves,
    Oracle,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Overrides,
}

fn solver(e: SddpError) -> CliError {
    CliError::Solver(e.to_string())
}

fn bench_err(e: BenchmarkError) -> CliError {
    CliError::Solver(e.to_string())
}

fn analysis_err(out: &Path) -> impl Fn(AnalysisError) -> CliError + '_ {
    move |e| CliError::data(out.join(POLICY_FILE), e.to_string())
}

/// Runs one subcommand and returns a one-line summary.
pub fn run(command: Command, options: &RunOptions) -> Result<String, CliError> {
    let settings = validate_config(&options.config, &options.overrides)?;
    let out = options.out.as_path();
    create_dir(out)?;
    let mut inputs = vec![options.config.clone()];
    if let WeatherSource::File { path, .. } = &settings.weather {
        inputs.push(path.clone());
    }
    if matches!(command, Command::Simulate | Command::Curves) {
        inputs.push(out.join(POLICY_FILE));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.training.threads)
        .build()
        .map_err(|e| CliError::Solver(format!("thread pool: {e}")))?;
    pool.install(|| {
        // a missing policy is reported before anything is written
        let policy = match command {
            Command::Simulate | Command::Curves => Some(read_policy(&settings, out)?),
            _ => None,
        };
        write_provenance(out, &settings, &inputs)?;
        match command {
            Command::Train => train(&settings, out),
            Command::Simulate => simulate(&settings, out, &policy.expect("policy read")),
            Command::Bench => bench(&settings, out),
            Command::Acf => acf(&settings, out),
            Command::Curves => curves(&settings, out, &policy.expect("policy read")),
            Command::Oracle => oracle(&settings, out),
        }
    })
}

fn train_options(settings: &Settings) -> TrainOptions {
    let t = &settings.training;
    TrainOptions {
        max_iterations: t.max_iterations,
        time_limit: t.time_limit,
        trust_region: t.trust_region.then(TrustRegion::default),
        seed: settings.seed,
        forward_paths: t.forward_paths,
        stop_rule: t.stop_every.map(|every| StopRule { every, paths: t.stop_paths }),
        fixed_capacities: None,
    }
}

fn read_policy(settings: &Settings, out: &Path) -> Result<(SamplingLattice, Policy), CliError> {
    let lattice = load_lattice(settings)?;
    let path = out.join(POLICY_FILE);
    let policy = PolicyFile::read(&path)?.into_policy(&settings.model, lattice.num_stages(), &path)?;
    Ok((lattice, policy))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::IterationLimit => "iteration_limit",
        Termination::TimeLimit => "time_limit",
        Termination::BoundsMet => "bounds_met",
    }
}

fn capacity_rows(model: &ModelConfig, x: &[f64]) -> Vec<Vec<String>> {
    model.layout().names().iter().zip(x).map(|(n, v)| vec![n.clone(), num(*v)]).collect()
}

/// A path's name: its weather year when every stage shares one.
fn path_name(labels: &[String]) -> String {
    match labels.first() {
        Some(first) if labels.iter().all(|l| l == first) => first.clone(),
        _ => labels.join("|"),
    }
}

fn train(settings: &Settings, out: &Path) -> Result<String, CliError> {
    let model = &settings.model;
    let lattice = load_lattice(settings)?;
    let policy = sddp::train(model, &lattice, &train_options(settings)).map_err(solver)?;
    PolicyFile::from_policy(model, &policy).write(&out.join(POLICY_FILE))?;
    write_csv(
        &out.join("training_log.csv"),
        &["iteration", "seconds", "lower_bound", "forward_cost", "trust_radius"],
        policy.log.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.seconds),
                num(r.lower_bound),
                num(r.forward_cost),
                r.trust_radius.map_or_else(String::new, num),
            ]
        }),
    )?;
    write_csv(&out.join("capacities.csv"), &["coordinate", "value"], capacity_rows(model, &policy.capacities.0))?;
    let lb = policy.log.last().map(|r| r.lower_bound);
    Ok(format!(
        "train: {} iterations, {} cuts, lower bound {}, stopped by {}",
        policy.log.len(),
        policy.num_cuts(),
        lb.map_or_else(|| "n/a".into(), num),
        termination_name(policy.termination)
    ))
}

fn simulate(
    settings: &Settings,
    out: &Path,
    (lattice, policy): &(SamplingLattice, Policy),
) -> Result<String, CliError> {
    let model = &settings.model;
    let paths = select_paths(settings, lattice)?;
    let trajectories = sddp::simulate(model, lattice, policy, &paths).map_err(solver)?;
    write_trajectories(model, &out.join("trajectories.csv"), &trajectories)?;
    let costs = trajectories.iter().enumerate().flat_map(|(p, traj)| {
        traj.stages.iter().map(move |r| {
            vec![p.to_string(), r.stage.to_string(), r.label.clone(), num(r.stage_cost), num(r.cost_to_go)]
        })
    });
    write_csv(&out.join("stage_costs.csv"), &["path", "stage", "label", "stage_cost", "cost_to_go"], costs)?;
    let names = model.layout().names().to_vec();
    let duals = trajectories.iter().enumerate().flat_map(|(p, traj)| {
        let names = &names;
        traj.stages.iter().flat_map(move |r| {
            r.fishing_duals
                .iter()
                .zip(names)
                .map(move |(d, n)| vec![p.to_string(), r.stage.to_string(), n.clone(), num(*d)])
        })
    });
    write_csv(&out.join("fishing_duals.csv"), &["path", "stage", "coordinate", "dual"], duals)?;
    let mut kkt = KktReport::default();
    for traj in &trajectories {
        kkt.merge(kkt_audit(model, traj));
    }
    write_csv(
        &out.join("kkt_audit.csv"),
        &["checked", "exempt", "violations"],
        [vec![kkt.checked.to_string(), kkt.exempt.to_string(), kkt.violations.len().to_string()]],
    )?;
    let mean = trajectories.iter().map(Trajectory::total_cost).sum::<f64>() / trajectories.len().max(1) as f64;
    Ok(format!(
        "simulate: {} paths, mean total cost {}, {} bid deviations",
        trajectories.len(),
        num(mean),
        kkt.violations.len()
    ))
}

/// Optional flows (imports, offtake) are empty when the option is absent.
fn at(v: &[f64], h: usize) -> f64 {
    v.get(h).copied().unwrap_or(0.0)
}

fn write_trajectories(model: &ModelConfig, path: &Path, trajectories: &[Trajectory]) -> Result<(), CliError> {
    let catalog = &model.catalog;
    let mut header: Vec<String> =
        ["path", "stage", "label", "period", "price", "shedding", "spot_imports", "ltc_offtake"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend(catalog.generators.iter().map(|g| format!("gen_{}", g.name)));
    for s in &catalog.storages {
        for field in ["discharge", "charge", "level", "msv"] {
            header.push(format!("{field}_{}", s.name));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = trajectories.iter().enumerate().flat_map(|(p, traj)| {
        traj.stages.iter().filter_map(|r| r.dispatch.as_ref().map(|d| (r, d))).flat_map(move |(r, d)| {
            (0..d.prices.len()).map(move |h| {
                let mut row = vec![
                    p.to_string(),
                    r.stage.to_string(),
                    r.label.clone(),
                    h.to_string(),
                    num(d.prices[h]),
                    num(at(&d.shedding, h)),
                    num(at(&d.spot_imports, h)),
                    num(at(&d.ltc_offtake, h)),
                ];
                row.extend(d.generation.iter().map(|g| num(g[h])));
                for s in 0..d.level.len() {
                    row.extend([num(d.discharge[s][h]), num(d.charge[s][h]), num(d.level[s][h]), num(d.msv[s][h])]);
                }
                row
            })
        })
    });
    write_csv(path, &header, rows)
}

fn bench(settings: &Settings, out: &Path) -> Result<String, CliError> {
    let model = &settings.model;
    let lattice = load_lattice(settings)?;
    let paths = select_paths(settings, &lattice)?;
    let pf = perfect_foresight(model, &paths).map_err(bench_err)?;
    let singles: Vec<(String, BenchmarkResult)> = paths
        .iter()
        .map(|p| single_year_deterministic(model, p).map(|r| (path_name(&p.labels), r)))
        .collect::<Result<_, _>>()
        .map_err(bench_err)?;
    let runs: Vec<(&str, String, &BenchmarkResult)> = std::iter::once(("perfect_foresight", String::new(), &pf))
        .chain(singles.iter().map(|(name, r)| ("single_year", name.clone(), r)))
        .collect();
    write_csv(
        &out.join("bench_summary.csv"),
        &["benchmark", "year", "objective", "capital_cost"],
        runs.iter().map(|(b, y, r)| vec![b.to_string(), y.clone(), num(r.objective), num(r.capital_cost)]),
    )?;
    write_csv(
        &out.join("bench_capacities.csv"),
        &["benchmark", "year", "coordinate", "value"],
        runs.iter().flat_map(|(b, y, r)| {
            capacity_rows(model, &r.capacities.0).into_iter().map(move |mut row| {
                row.insert(0, y.clone());
                row.insert(0, b.to_string());
                row
            })
        }),
    )?;
    write_csv(
        &out.join("bench_years.csv"),
        &["year", "probability", "dispatch_cost"],
        pf.scenarios.iter().map(|s| vec![path_name(&s.labels), num(s.probability), num(s.dispatch_cost)]),
    )?;
    write_csv(
        &out.join("bench_prices.csv"),
        &["year", "stage", "period", "price"],
        pf.scenarios.iter().flat_map(|s| {
            let year = path_name(&s.labels);
            s.stages.iter().enumerate().flat_map(move |(t, d)| {
                let year = year.clone();
                d.prices
                    .iter()
                    .enumerate()
                    .map(move |(h, p)| vec![year.clone(), (t + 1).to_string(), h.to_string(), num(*p)])
            })
        }),
    )?;
    let single_mean = singles.iter().map(|(_, r)| r.objective).sum::<f64>() / singles.len().max(1) as f64;
    Ok(format!(
        "bench: {} years, perfect foresight {}, mean single-year {}",
        paths.len(),
        num(pf.objective),
        num(single_mean)
    ))
}

fn acf(settings: &Settings, out: &Path) -> Result<String, CliError> {
    let Some(series) = load_series(settings)? else {
        return Err(CliError::data("weather", "acf needs a weather file, not a builtin lattice"));
    };
    let source = match &settings.weather {
        WeatherSource::File { path, .. } => path.clone(),
        WeatherSource::Builtin(name) => PathBuf::from(name),
    };
    let report = acf_test(&series, settings.acf.stage_length, settings.acf.max_lag)
        .map_err(|e| CliError::data(&source, e.to_string()))?;
    write_csv(
        &out.join("acf.csv"),
        &["variable", "lag", "rho", "band"],
        report.series.iter().flat_map(|s| {
            s.rho.iter().enumerate().map(|(k, r)| vec![s.variable.clone(), (k + 1).to_string(), num(*r), num(s.band)])
        }),
    )?;
    let outside: usize = report.series.iter().map(|s| s.rho.iter().skip(1).filter(|r| r.abs() > s.band).count()).sum();
    Ok(format!("acf: {} variables, {outside} coefficients beyond lag 1 outside the band", report.series.len()))
}

fn curves(settings: &Settings, out: &Path, (lattice, policy): &(SamplingLattice, Policy)) -> Result<String, CliError> {
    let model = &settings.model;
    let layout = model.layout();
    let fail = analysis_err(out);
    let mut curve_rows = Vec::new();
    let mut stat_rows = Vec::new();
    let paths = select_paths(settings, lattice)?;
    let trajectories = sddp::simulate(model, lattice, policy, &paths).map_err(solver)?;
    let mut count = 0;
    for (s, storage) in model.catalog.ldes() {
        let has_energy = layout.index_of(StateKind::Energy(s)).is_some_and(|k| policy.capacities[k] > 0.0);
        if !has_energy {
            continue;
        }
        for t in 1..=lattice.num_stages() {
            let c = msv_curve(model, policy, t, s, settings.analysis.grid_step).map_err(&fail)?;
            for i in 0..c.levels.len() {
                curve_rows.push(vec![
                    t.to_string(),
                    storage.name.clone(),
                    num(c.levels[i]),
                    num(c.msv[i]),
                    num(c.charge_bid[i]),
                    num(c.discharge_bid[i]),
                ]);
            }
            count += 1;
        }
        if trajectories.is_empty() {
            continue;
        }
        let e_ini = layout.index_of(StateKind::InitialLevel(s)).map_or(0.0, |k| policy.capacities[k]);
        for st in trajectory_stats(&trajectories, s, e_ini).map_err(&fail)? {
            for (name, v) in [("mean", st.mean), ("p5", st.p5), ("p25", st.p25), ("p75", st.p75), ("p95", st.p95)] {
                stat_rows.push(vec![st.stage.to_string(), storage.name.clone(), name.to_string(), num(v)]);
            }
        }
    }
    write_csv(
        &out.join("bid_curves.csv"),
        &["stage", "storage", "level", "msv", "charge_bid", "discharge_bid"],
        curve_rows,
    )?;
    write_csv(&out.join("trajectory_stats.csv"), &["stage", "storage", "stat", "value"], stat_rows)?;
    let dc = price_duration_curve(&trajectories);
    write_csv(
        &out.join("duration_curve.csv"),
        &["rank", "share", "price"],
        dc.prices.iter().zip(&dc.shares).enumerate().map(|(i, (p, s))| vec![(i + 1).to_string(), num(*s), num(*p)]),
    )?;
    Ok(format!("curves: {count} bid curves, {} simulated paths", trajectories.len()))
}

fn oracle(settings: &Settings, out: &Path) -> Result<String, CliError> {
    let model = &settings.model;
    let lattice = load_lattice(settings)?;
    let ef = extensive_form(model, &lattice).map_err(bench_err)?;
    let policy = sddp::train(model, &lattice, &train_options(settings)).map_err(solver)?;
    let lb = match policy.log.last() {
        Some(r) => r.lower_bound,
        None => sddp::lower_bound(model, &lattice, &policy).map_err(solver)?,
    };
    let gap = (ef.objective - lb).abs() / ef.objective.abs().max(1.0);
    write_csv(
        &out.join("oracle.csv"),
        &["oracle_optimum", "sddp_lower_bound", "relative_gap", "iterations"],
        [vec![num(ef.objective), num(lb), num(gap), policy.log.len().to_string()]],
    )?;
    Ok(format!("oracle: optimum {}, lower bound {}, relative gap {gap:.3e}", num(ef.objective), num(lb)))
}
