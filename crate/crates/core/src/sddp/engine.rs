use alloc::string::String;
use alloc::vec::Vec;

use super::{Cut, Policy, SddpError, StageRecord, Trajectory};
use crate::lp::{solve, LpSolution};
use crate::model::{
    build_capacity_stage, build_dispatch_stage, ModelConfig, ModelError, StageProblem, StateLayout, StateVector,
    WeatherVector,
};
use crate::weather::{SamplingLattice, WeatherPath};

/// How stage 0 is treated in a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum StageZero {
    /// Optimize capacities, optionally within `[lo, hi]` per state coordinate.
    Solve(Option<Vec<(f64, f64)>>),
    /// Use the given outgoing state.
    Fixed(StateVector),
}

/// Stage problems of one lattice with the cuts of a policy loaded.
#[derive(Clone, Debug)]
pub struct Sddp<'a> {
    config: &'a ModelConfig,
    lattice: &'a SamplingLattice,
    layout: StateLayout,
    stage0: StageProblem,
    /// `templates[t - 1][node]`.
    templates: Vec<Vec<StageProblem>>,
    policy: Policy,
}

fn checked(
    stage: usize,
    realization: Option<usize>,
    r: Result<LpSolution, crate::lp::LpError>,
) -> Result<LpSolution, SddpError> {
    let sol = r.map_err(|source| SddpError::Lp { stage, source })?;
    if !sol.is_optimal() {
        return Err(SddpError::SolverFailure { stage, realization, status: sol.status });
    }
    Ok(sol)
}

#[cfg(feature = "parallel")]
fn map_indices<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

impl<'a> Sddp<'a> {
    pub fn new(config: &'a ModelConfig, lattice: &'a SamplingLattice) -> Result<Self, SddpError> {
        if let Some(e) = config.validate().into_iter().next() {
            return Err(e.into());
        }
        let t_max = lattice.num_stages();
        let layout = config.layout();
        let stage0 = build_capacity_stage(&config.catalog)?;
        let templates = (1..=t_max)
            .map(|t| {
                lattice
                    .nodes(t)
                    .iter()
                    .map(|n| build_dispatch_stage(t, t_max, config, &n.weather))
                    .collect::<Result<Vec<_>, ModelError>>()
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let policy = Policy::empty(t_max, layout.dim());
        Ok(Self { config, lattice, layout, stage0, templates, policy })
    }

    /// Engine with every cut of `policy` loaded, capacities included.
    pub fn with_policy(
        config: &'a ModelConfig,
        lattice: &'a SamplingLattice,
        policy: &Policy,
    ) -> Result<Self, SddpError> {
        let mut engine = Self::new(config, lattice)?;
        if policy.num_stages != engine.policy.num_stages || policy.state_dim != engine.policy.state_dim {
            return Err(SddpError::InvalidArgument(alloc::format!(
                "policy has {} stages and {} states, the model has {} and {}",
                policy.num_stages,
                policy.state_dim,
                engine.policy.num_stages,
                engine.policy.state_dim
            )));
        }
        for cut in policy.pools.iter().flatten() {
            engine.add_cut(cut.clone())?;
        }
        engine.policy.capacities = policy.capacities.clone();
        engine.policy.log = policy.log.clone();
        engine.policy.termination = policy.termination;
        Ok(engine)
    }

    pub fn config(&self) -> &ModelConfig {
        self.config
    }

    pub fn lattice(&self) -> &SamplingLattice {
        self.lattice
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn policy_mut(&mut self) -> &mut Policy {
        &mut self.policy
    }

    pub fn into_policy(self) -> Policy {
        self.policy
    }

    pub fn num_stages(&self) -> usize {
        self.templates.len()
    }

    pub fn stage_zero(&self) -> &StageProblem {
        &self.stage0
    }

    /// Stage `t` problem of sample `node`, with the current cuts.
    pub fn problem(&self, t: usize, node: usize) -> &StageProblem {
        &self.templates[t - 1][node]
    }

    pub fn add_cut(&mut self, cut: Cut) -> Result<(), SddpError> {
        let t = cut.stage - 1;
        self.policy.push_cut(cut.clone())?;
        if t == 0 {
            self.stage0.add_cut(cut.intercept, &cut.slope)?;
        } else {
            for p in &mut self.templates[t - 1] {
                p.add_cut(cut.intercept, &cut.slope)?;
            }
        }
        Ok(())
    }

    /// Capital cost of an outgoing stage-0 state, EUR.
    pub fn capital_cost(&self, x: &StateVector) -> f64 {
        let mut primal = alloc::vec![0.0; self.stage0.lp.num_vars()];
        for (k, v) in self.stage0.outgoing.iter().enumerate() {
            primal[v.0] = x[k];
        }
        self.stage0.lp.evaluate(&primal)
    }

    /// Capital cost plus the current outer approximation of the future.
    pub fn model_value(&self, x: &StateVector) -> f64 {
        self.capital_cost(x) + self.policy.cost_to_go(0, x)
    }

    /// Solves stage 0, optionally boxed.
    pub fn solve_stage_zero(&self, bounds: Option<&[(f64, f64)]>) -> Result<(LpSolution, StateVector), SddpError> {
        let sol = match bounds {
            None => solve(&self.stage0.lp),
            Some(b) => {
                let mut lp = self.stage0.lp.clone();
                for (k, &(lo, hi)) in b.iter().enumerate() {
                    let v = self.stage0.outgoing[k];
                    let (l0, u0) = (lp.lower_bounds()[v.0], lp.upper_bounds()[v.0]);
                    let (l, u) = (lo.max(l0), hi.min(u0));
                    if l <= u {
                        lp.set_bounds(v, l, u).map_err(|source| SddpError::Lp { stage: 0, source })?;
                    }
                }
                solve(&lp)
            }
        };
        let sol = checked(0, None, sol)?;
        let x = self.stage0.extract_state(&sol)?;
        Ok((sol, x))
    }

    /// Lower bound and its capacity argmin.
    pub fn lower_bound(&self) -> Result<(f64, StateVector), SddpError> {
        let (sol, x) = self.solve_stage_zero(None)?;
        Ok((sol.objective, x))
    }

    fn stage_zero_record(&self, mode: &StageZero) -> Result<StageRecord, SddpError> {
        let (outgoing, stage_cost, cost_to_go) = match mode {
            StageZero::Solve(bounds) => {
                let (sol, x) = self.solve_stage_zero(bounds.as_deref())?;
                (x, self.stage0.stage_cost(&sol), sol.value(self.stage0.theta.expect("stage 0 has theta")))
            }
            StageZero::Fixed(x) => {
                if x.len() != self.layout.dim() {
                    return Err(ModelError::DimensionMismatch { got: x.len(), expected: self.layout.dim() }.into());
                }
                (x.clone(), self.capital_cost(x), self.policy.cost_to_go(0, x))
            }
        };
        Ok(StageRecord {
            stage: 0,
            node: None,
            label: String::new(),
            incoming: StateVector::default(),
            outgoing,
            dispatch: None,
            stage_cost,
            cost_to_go,
            fishing_duals: Vec::new(),
        })
    }

    fn run_stage(
        &self,
        problem: &StageProblem,
        t: usize,
        node: Option<usize>,
        label: String,
        x_in: &StateVector,
    ) -> Result<StageRecord, SddpError> {
        let p = problem.apply_incoming_state(x_in)?;
        let sol = checked(t, node, solve(&p.lp))?;
        let dispatch = p.dispatch_solution(&sol)?;
        Ok(StageRecord {
            stage: t,
            node,
            label,
            incoming: x_in.clone(),
            outgoing: p.extract_state(&sol)?,
            stage_cost: dispatch.stage_cost,
            cost_to_go: dispatch.cost_to_go,
            dispatch: Some(dispatch),
            fishing_duals: p.fishing.iter().map(|r| sol.dual(*r)).collect(),
        })
    }

    /// Forward pass through lattice nodes `nodes[t - 1]`.
    pub fn forward(&self, nodes: &[usize], mode: &StageZero) -> Result<Trajectory, SddpError> {
        if nodes.len() != self.num_stages() {
            return Err(SddpError::InvalidArgument(alloc::format!(
                "path has {} stages, the lattice has {}",
                nodes.len(),
                self.num_stages()
            )));
        }
        let mut stages = alloc::vec![self.stage_zero_record(mode)?];
        for (i, &node) in nodes.iter().enumerate() {
            let t = i + 1;
            if node >= self.templates[i].len() {
                return Err(SddpError::InvalidArgument(alloc::format!("stage {t} has no node {node}")));
            }
            let label = self.lattice.nodes(t)[node].label.clone();
            let x_in = stages[i].outgoing.clone();
            stages.push(self.run_stage(&self.templates[i][node], t, Some(node), label, &x_in)?);
        }
        Ok(Trajectory { stages })
    }

    /// Forward pass on arbitrary weather. Stages whose weather matches the
    /// lattice node named by the path reuse that node's problem.
    pub fn forward_weather(&self, path: &WeatherPath, mode: &StageZero) -> Result<Trajectory, SddpError> {
        if path.weather.len() != self.num_stages() {
            return Err(SddpError::InvalidArgument(alloc::format!(
                "path has {} stages, the lattice has {}",
                path.weather.len(),
                self.num_stages()
            )));
        }
        let mut stages = alloc::vec![self.stage_zero_record(mode)?];
        for (i, w) in path.weather.iter().enumerate() {
            let t = i + 1;
            let node =
                path.nodes.get(i).copied().filter(|&n| self.lattice.nodes(t).get(n).is_some_and(|ln| ln.weather == *w));
            let label = path.labels.get(i).cloned().unwrap_or_default();
            let x_in = stages[i].outgoing.clone();
            let record = match node {
                Some(n) => self.run_stage(&self.templates[i][n], t, Some(n), label, &x_in)?,
                None => {
                    let p = self.build_with_cuts(t, w)?;
                    self.run_stage(&p, t, None, label, &x_in)?
                }
            };
            stages.push(record);
        }
        Ok(Trajectory { stages })
    }

    fn build_with_cuts(&self, t: usize, w: &WeatherVector) -> Result<StageProblem, SddpError> {
        let mut p = build_dispatch_stage(t, self.num_stages(), self.config, w)?;
        if t < self.num_stages() {
            for c in &self.policy.pools[t] {
                p.add_cut(c.intercept, &c.slope)?;
            }
        }
        Ok(p)
    }

    /// Optimal value and fishing duals of stage `t`, sample `node`, at `x`.
    pub fn solve_child(&self, t: usize, node: usize, x: &StateVector) -> Result<(f64, Vec<f64>), SddpError> {
        let p = self.templates[t - 1][node].apply_incoming_state(x)?;
        let sol = checked(t, Some(node), solve(&p.lp))?;
        Ok((sol.objective, p.fishing.iter().map(|r| sol.dual(*r)).collect()))
    }

    /// Average cut on `theta_t` at trial state `x` leaving stage `t - 1`.
    pub fn average_cut(&self, t: usize, x: &StateVector, iteration: usize) -> Result<Cut, SddpError> {
        let n = self.templates[t - 1].len();
        let results = map_indices(n, |i| self.solve_child(t, i, x));
        let p = self.lattice.probability(t);
        let mut value = 0.0;
        let mut slope = alloc::vec![0.0; x.len()];
        for r in results {
            let (q, rho) = r?;
            value += p * q;
            for (s, g) in slope.iter_mut().zip(&rho) {
                *s += p * g;
            }
        }
        let intercept = value - slope.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        Ok(Cut { stage: t, intercept, slope, iteration, trial: x.0.clone() })
    }

    /// Adds one cut per stage, from the last stage backwards.
    pub fn backward(&mut self, trajectory: &Trajectory, iteration: usize) -> Result<(), SddpError> {
        if trajectory.stages.len() != self.num_stages() + 1 {
            return Err(SddpError::InvalidArgument("trajectory does not match the lattice".into()));
        }
        for t in (0..self.num_stages()).rev() {
            let cut = self.average_cut(t + 1, &trajectory.stages[t].outgoing, iteration)?;
            self.add_cut(cut)?;
        }
        Ok(())
    }
}
