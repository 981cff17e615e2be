use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Clock, Policy, Sddp, SddpError, StageZero, Termination, TrainingRecord, Trajectory};
use crate::math;
use crate::model::{ModelConfig, StateVector};
use crate::weather::{SamplingLattice, WeatherPath};

/// Box on stage-0 capacities around the incumbent.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrustRegion {
    /// Initial half-width as a fraction of each capacity's scale.
    pub initial_radius: f64,
    /// Non-improving iterations before the radius halves.
    pub shrink_after: usize,
    pub shrink_factor: f64,
    /// Smallest radius as a fraction of the scale.
    pub min_radius: f64,
}

impl Default for TrustRegion {
    fn default() -> Self {
        Self { initial_radius: 0.25, shrink_after: 50, shrink_factor: 0.5, min_radius: 1e-6 }
    }
}

/// Stop once `LB >= mean - 2 SE` of an upper-bound estimate taken every
/// `every` iterations.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopRule {
    pub every: usize,
    pub paths: usize,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainOptions {
    pub max_iterations: usize,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub trust_region: Option<TrustRegion>,
    pub seed: u64,
    /// Forward paths per iteration.
    pub forward_paths: usize,
    pub stop_rule: Option<StopRule>,
    /// Keep stage-0 capacities at this state, training only the dispatch.
    pub fixed_capacities: Option<StateVector>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            time_limit: None,
            trust_region: Some(TrustRegion::default()),
            seed: 0,
            forward_paths: 1,
            stop_rule: None,
            fixed_capacities: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

fn capacity_scale(engine: &Sddp<'_>) -> Vec<Option<f64>> {
    let lp = &engine.stage_zero().lp;
    engine
        .stage_zero()
        .outgoing
        .iter()
        .enumerate()
        .map(|(k, v)| {
            engine.layout().is_capacity(k).then(|| {
                let (lo, hi) = (lp.lower_bounds()[v.0], lp.upper_bounds()[v.0]);
                if hi.is_finite() && hi > lo {
                    hi - lo
                } else {
                    1.0
                }
            })
        })
        .collect()
}

struct Region {
    settings: TrustRegion,
    scale: Vec<Option<f64>>,
    radius: f64,
    incumbent: Option<StateVector>,
    incumbent_value: f64,
    stalled: usize,
}

impl Region {
    fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        let inc = self.incumbent.as_ref()?;
        Some(
            self.scale
                .iter()
                .zip(inc.iter())
                .map(|(s, x)| match s {
                    Some(s) => (x - self.radius * s, x + self.radius * s),
                    None => (f64::NEG_INFINITY, f64::INFINITY),
                })
                .collect(),
        )
    }

    /// Accepts the candidate if the updated model prefers it.
    fn update(&mut self, engine: &Sddp<'_>, candidate: &StateVector) {
        let cand = engine.model_value(candidate);
        match &self.incumbent {
            None => {
                self.incumbent = Some(candidate.clone());
                self.incumbent_value = cand;
            }
            Some(inc) => {
                let current = engine.model_value(inc);
                if cand < current - 1e-12 * current.abs() {
                    self.incumbent = Some(candidate.clone());
                    self.incumbent_value = cand;
                    self.stalled = 0;
                } else {
                    self.incumbent_value = current;
                    self.stalled += 1;
                    if self.stalled >= self.settings.shrink_after {
                        self.radius = (self.radius * self.settings.shrink_factor).max(self.settings.min_radius);
                        self.stalled = 0;
                    }
                }
            }
        }
    }
}

#[cfg(feature = "std")]
pub fn train(config: &ModelConfig, lattice: &SamplingLattice, options: &TrainOptions) -> Result<Policy, SddpError> {
    train_with_clock(config, lattice, options, &super::StdClock::start())
}

/// Alternates forward and backward passes until the iteration limit, the
/// time limit or the optional bound rule stops it. A time limit returns
/// the policy so far with [`Termination::TimeLimit`].
pub fn train_with_clock(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    options: &TrainOptions,
    clock: &dyn Clock,
) -> Result<Policy, SddpError> {
    if options.forward_paths == 0 {
        return Err(SddpError::InvalidArgument("forward_paths must be at least 1".into()));
    }
    let mut engine = Sddp::new(config, lattice)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut region = match (&options.trust_region, &options.fixed_capacities) {
        (Some(settings), None) => Some(Region {
            settings: settings.clone(),
            scale: capacity_scale(&engine),
            radius: settings.initial_radius,
            incumbent: None,
            incumbent_value: f64::INFINITY,
            stalled: 0,
        }),
        _ => None,
    };
    let mut termination = Termination::IterationLimit;
    let mut log = Vec::new();
    for iteration in 1..=options.max_iterations {
        if options.time_limit.is_some_and(|l| clock.elapsed_seconds() >= l) {
            termination = Termination::TimeLimit;
            break;
        }
        let mode = match (&options.fixed_capacities, &region) {
            (Some(x), _) => StageZero::Fixed(x.clone()),
            (None, Some(r)) => StageZero::Solve(r.bounds()),
            (None, None) => StageZero::Solve(None),
        };
        let mut forward_cost = 0.0;
        let mut first: Option<StateVector> = None;
        for _ in 0..options.forward_paths {
            let path = lattice.sample_path_with(&mut rng);
            let trajectory = engine.forward(&path.nodes, &mode)?;
            forward_cost += trajectory.total_cost() / options.forward_paths as f64;
            first.get_or_insert_with(|| trajectory.capacities().clone());
            engine.backward(&trajectory, iteration)?;
        }
        let lower_bound = match &options.fixed_capacities {
            Some(x) => engine.model_value(x),
            None => engine.lower_bound()?.0,
        };
        if let (Some(r), Some(candidate)) = (region.as_mut(), first.as_ref()) {
            r.update(&engine, candidate);
        }
        log.push(TrainingRecord {
            iteration,
            seconds: clock.elapsed_seconds(),
            lower_bound,
            forward_cost,
            trust_radius: region.as_ref().map(|r| r.radius),
        });
        if let Some(rule) = &options.stop_rule {
            if rule.every > 0 && iteration % rule.every == 0 {
                let x = final_capacities(&engine, options)?;
                let est = estimate(&engine, &x, rule.paths, options.seed.wrapping_add(iteration as u64))?;
                if lower_bound >= est.mean - 2.0 * est.std_error {
                    termination = Termination::BoundsMet;
                    break;
                }
            }
        }
    }
    let capacities = final_capacities(&engine, options)?;
    let policy = engine.policy_mut();
    policy.capacities = capacities;
    policy.log = log;
    policy.termination = termination;
    Ok(engine.into_policy())
}

fn final_capacities(engine: &Sddp<'_>, options: &TrainOptions) -> Result<StateVector, SddpError> {
    match &options.fixed_capacities {
        Some(x) => Ok(x.clone()),
        None => Ok(engine.lower_bound()?.1),
    }
}

fn estimate(engine: &Sddp<'_>, x: &StateVector, n: usize, seed: u64) -> Result<BoundEstimate, SddpError> {
    if n < 2 {
        return Err(SddpError::InvalidArgument("an upper-bound estimate needs at least two paths".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = StageZero::Fixed(x.clone());
    let mut costs = Vec::with_capacity(n);
    for _ in 0..n {
        let path = engine.lattice().sample_path_with(&mut rng);
        costs.push(engine.forward(&path.nodes, &mode)?.total_cost());
    }
    let mean = costs.iter().sum::<f64>() / n as f64;
    let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64;
    Ok(BoundEstimate { mean, std_error: math::sqrt(var / n as f64), paths: n })
}

/// Monte Carlo mean and standard error of total cost with the policy's
/// capacities, over `n_paths` sampled paths.
pub fn upper_bound_estimate(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    policy: &Policy,
    n_paths: usize,
    seed: u64,
) -> Result<BoundEstimate, SddpError> {
    let engine = Sddp::with_policy(config, lattice, policy)?;
    estimate(&engine, &policy.capacities, n_paths, seed)
}

/// Stage-0 optimum against the policy's first cut pool.
pub fn lower_bound(config: &ModelConfig, lattice: &SamplingLattice, policy: &Policy) -> Result<f64, SddpError> {
    Ok(Sddp::with_policy(config, lattice, policy)?.lower_bound()?.0)
}

/// Forward pass that optimizes stage 0 against the policy's cuts.
pub fn forward_pass(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    policy: &Policy,
    path: &WeatherPath,
) -> Result<Trajectory, SddpError> {
    Sddp::with_policy(config, lattice, policy)?.forward_weather(path, &StageZero::Solve(None))
}

/// One backward pass at the trajectory's trial states.
pub fn backward_pass(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    policy: &Policy,
    trajectory: &Trajectory,
) -> Result<Policy, SddpError> {
    let mut engine = Sddp::with_policy(config, lattice, policy)?;
    let iteration = policy.log.last().map_or(0, |r| r.iteration) + 1;
    engine.backward(trajectory, iteration)?;
    Ok(engine.into_policy())
}

/// Simulates the policy with its capacities frozen, one trajectory per path.
pub fn simulate(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    policy: &Policy,
    paths: &[WeatherPath],
) -> Result<Vec<Trajectory>, SddpError> {
    if paths.is_empty() {
        return Ok(Vec::new());
    }
    let engine = Sddp::with_policy(config, lattice, policy)?;
    let mode = StageZero::Fixed(policy.capacities.clone());
    paths.iter().map(|p| engine.forward_weather(p, &mode)).collect()
}
