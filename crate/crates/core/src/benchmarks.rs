//! Deterministic-equivalent reference models built by cloning stage
//! problems into one LP and linking every fishing copy to its parent's
//! outgoing state with an equality row.

use alloc::string::String;
use alloc::vec::Vec;

use crate::lp::{solve, LpError, LpInstance, LpSolution, LpStatus, RowId, VarId};
use crate::model::{
    build_capacity_stage, build_dispatch_stage, DispatchSolution, ModelConfig, ModelError, StageProblem, StateVector,
};
use crate::weather::{SamplingLattice, WeatherPath};

/// Largest scenario tree [`extensive_form`] will build.
pub const MAX_TREE_PATHS: u128 = 10_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("scenario tree has {paths} paths, limit is {limit}")]
    TreeTooLarge { paths: f64, limit: u128 },
    #[error("no weather years given")]
    NoYears,
    #[error("path has {got} stages, expected {expected}")]
    PathLength { got: usize, expected: usize },
    #[error("monolithic LP returned {0:?}")]
    SolverFailure(LpStatus),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Dispatch along one scenario (a leaf path or a weather year).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioSummary {
    pub labels: Vec<String>,
    pub probability: f64,
    /// EUR.
    pub dispatch_cost: f64,
    pub stages: Vec<DispatchSolution>,
}

impl ScenarioSummary {
    /// Electricity prices over all periods, EUR/MWh.
    pub fn prices(&self) -> Vec<f64> {
        self.stages.iter().flat_map(|s| s.prices.iter().copied()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkResult {
    pub capacities: StateVector,
    /// EUR.
    pub objective: f64,
    pub capital_cost: f64,
    pub scenarios: Vec<ScenarioSummary>,
}

struct Placed {
    vars: Vec<VarId>,
    rows: Vec<RowId>,
    weight: f64,
}

/// Copies `src` into `dst` with its objective scaled by `weight`.
fn merge(dst: &mut LpInstance, src: &LpInstance, prefix: &str, weight: f64) -> Result<Placed, LpError> {
    let mut vars = Vec::with_capacity(src.num_vars());
    for j in 0..src.num_vars() {
        vars.push(dst.add_variable(
            alloc::format!("{prefix}{}", src.var_label(VarId(j))),
            weight * src.objective()[j],
            src.lower_bounds()[j],
            src.upper_bounds()[j],
        )?);
    }
    let mut rows = Vec::with_capacity(src.num_rows());
    for r in src.rows() {
        let terms = r.terms.iter().map(|(v, a)| (vars[v.0], *a)).collect();
        rows.push(dst.add_row(alloc::format!("{prefix}{}", r.label), terms, r.sense, r.rhs)?);
    }
    Ok(Placed { vars, rows, weight })
}

/// The stage problem without its cost-to-go variable.
fn without_theta(p: &StageProblem) -> Result<StageProblem, LpError> {
    let mut p = p.clone();
    if let Some(theta) = p.theta {
        p.lp.set_bounds(theta, 0.0, 0.0)?;
        p.lp.set_cost(theta, 0.0);
    }
    Ok(p)
}

/// The part of a merged solution that belongs to one placed problem,
/// with duals rescaled to that problem's own objective.
fn restrict(sol: &LpSolution, template: &StageProblem, placed: &Placed) -> LpSolution {
    let primal: Vec<f64> = placed.vars.iter().map(|v| sol.value(*v)).collect();
    LpSolution {
        status: sol.status,
        objective: template.lp.evaluate(&primal),
        duals: placed.rows.iter().map(|r| sol.dual(*r) / placed.weight).collect(),
        reduced_costs: placed.vars.iter().map(|v| sol.reduced_costs[v.0] / placed.weight).collect(),
        row_activity: placed.rows.iter().map(|r| sol.row_activity[r.0]).collect(),
        primal,
        basis: None,
        iterations: sol.iterations,
    }
}

struct Node {
    stage: usize,
    template: StageProblem,
    placed: Placed,
    label: String,
    parent: Option<usize>,
    probability: f64,
}

struct Tree {
    lp: LpInstance,
    nodes: Vec<Node>,
}

impl Tree {
    fn new() -> Self {
        Self { lp: LpInstance::new(), nodes: Vec::new() }
    }

    /// Places `template` under `parent` (or pinned to `incoming` at the
    /// root level) and returns its node index.
    fn place(
        &mut self,
        template: StageProblem,
        stage: usize,
        label: String,
        parent: Option<usize>,
        incoming: Option<&StateVector>,
        probability: f64,
    ) -> Result<usize, BenchmarkError> {
        let template = without_theta(&template)?;
        let id = self.nodes.len();
        let placed = merge(&mut self.lp, &template.lp, &alloc::format!("n{id}/"), probability)?;
        match (parent, incoming) {
            (Some(p), _) => {
                let parent_out: Vec<VarId> = {
                    let pn = &self.nodes[p];
                    pn.template.outgoing.iter().map(|v| pn.placed.vars[v.0]).collect()
                };
                for (k, row) in template.fishing.iter().enumerate() {
                    let r = placed.rows[row.0];
                    self.lp.add_term(r, parent_out[k], -1.0);
                    self.lp.set_rhs(r, 0.0);
                }
            }
            (None, Some(x)) => {
                for (k, row) in template.fishing.iter().enumerate() {
                    self.lp.set_rhs(placed.rows[row.0], x[k]);
                }
            }
            (None, None) => {}
        }
        self.nodes.push(Node { stage, template, placed, label, parent, probability });
        Ok(id)
    }

    fn solve(&self) -> Result<LpSolution, BenchmarkError> {
        let sol = solve(&self.lp)?;
        if !sol.is_optimal() {
            return Err(BenchmarkError::SolverFailure(sol.status));
        }
        Ok(sol)
    }

    /// Summaries of every root-to-leaf path through dispatch nodes.
    fn scenarios(&self, sol: &LpSolution) -> Result<Vec<ScenarioSummary>, BenchmarkError> {
        let mut has_child = alloc::vec![false; self.nodes.len()];
        for n in &self.nodes {
            if let Some(p) = n.parent {
                has_child[p] = true;
            }
        }
        let mut out = Vec::new();
        for (leaf, n) in self.nodes.iter().enumerate() {
            if has_child[leaf] || n.stage == 0 {
                continue;
            }
            let mut chain = Vec::new();
            let mut cur = Some(leaf);
            while let Some(i) = cur {
                if self.nodes[i].stage == 0 {
                    break;
                }
                chain.push(i);
                cur = self.nodes[i].parent;
            }
            chain.reverse();
            let mut stages = Vec::with_capacity(chain.len());
            for &i in &chain {
                let node = &self.nodes[i];
                stages.push(node.template.dispatch_solution(&restrict(sol, &node.template, &node.placed))?);
            }
            out.push(ScenarioSummary {
                labels: chain.iter().map(|&i| self.nodes[i].label.clone()).collect(),
                probability: n.probability,
                dispatch_cost: stages.iter().map(|s| s.stage_cost).sum(),
                stages,
            });
        }
        Ok(out)
    }

    fn result(&self, root: usize) -> Result<BenchmarkResult, BenchmarkError> {
        let sol = self.solve()?;
        let node = &self.nodes[root];
        let local = restrict(&sol, &node.template, &node.placed);
        Ok(BenchmarkResult {
            capacities: node.template.extract_state(&local)?,
            objective: sol.objective,
            capital_cost: local.objective,
            scenarios: self.scenarios(&sol)?,
        })
    }
}

fn dispatch_templates(config: &ModelConfig, lattice: &SamplingLattice) -> Result<Vec<Vec<StageProblem>>, ModelError> {
    let t_max = lattice.num_stages();
    (1..=t_max)
        .map(|t| lattice.nodes(t).iter().map(|n| build_dispatch_stage(t, t_max, config, &n.weather)).collect())
        .collect()
}

fn guard(lattice: &SamplingLattice, from_stage: usize) -> Result<(), BenchmarkError> {
    let sizes = &lattice.sizes()[from_stage..];
    match crate::weather::path_count(sizes) {
        Some(n) if n <= MAX_TREE_PATHS => Ok(()),
        _ => Err(BenchmarkError::TreeTooLarge { paths: crate::weather::path_count_f64(sizes), limit: MAX_TREE_PATHS }),
    }
}

fn grow(
    tree: &mut Tree,
    templates: &[Vec<StageProblem>],
    lattice: &SamplingLattice,
    t: usize,
    parent: Option<usize>,
    incoming: Option<&StateVector>,
    probability: f64,
) -> Result<(), BenchmarkError> {
    if t > templates.len() {
        return Ok(());
    }
    let p = probability * lattice.probability(t);
    for (i, template) in templates[t - 1].iter().enumerate() {
        let label = lattice.nodes(t)[i].label.clone();
        let id = tree.place(template.clone(), t, label, parent, incoming, p)?;
        grow(tree, templates, lattice, t + 1, Some(id), None, p)?;
    }
    Ok(())
}

/// The full scenario tree as one LP; its optimum is the true optimum of
/// the multistage problem.
pub fn extensive_form(config: &ModelConfig, lattice: &SamplingLattice) -> Result<BenchmarkResult, BenchmarkError> {
    guard(lattice, 0)?;
    let templates = dispatch_templates(config, lattice)?;
    let mut tree = Tree::new();
    let root = tree.place(build_capacity_stage(&config.catalog)?, 0, String::new(), None, None, 1.0)?;
    grow(&mut tree, &templates, lattice, 1, Some(root), None, 1.0)?;
    tree.result(root)
}

/// Expected optimal cost of stages `t + 1..=T` when stage `t` leaves state
/// `x`, by brute force over the remaining tree.
pub fn cost_to_go(
    config: &ModelConfig,
    lattice: &SamplingLattice,
    t: usize,
    x: &StateVector,
) -> Result<f64, BenchmarkError> {
    if t >= lattice.num_stages() {
        return Ok(0.0);
    }
    guard(lattice, t)?;
    let templates = dispatch_templates(config, lattice)?;
    let mut tree = Tree::new();
    grow(&mut tree, &templates, lattice, t + 1, None, Some(x), 1.0)?;
    Ok(tree.solve()?.objective)
}

/// Shared capacities, each year dispatched with full knowledge of its
/// weather at equal weight, each year meeting its own storage target.
pub fn perfect_foresight(config: &ModelConfig, years: &[WeatherPath]) -> Result<BenchmarkResult, BenchmarkError> {
    let Some(first) = years.first() else {
        return Err(BenchmarkError::NoYears);
    };
    let t_max = first.weather.len();
    let mut tree = Tree::new();
    let root = tree.place(build_capacity_stage(&config.catalog)?, 0, String::new(), None, None, 1.0)?;
    let w = 1.0 / years.len() as f64;
    for year in years {
        if year.weather.len() != t_max {
            return Err(BenchmarkError::PathLength { got: year.weather.len(), expected: t_max });
        }
        let mut parent = root;
        for (i, xi) in year.weather.iter().enumerate() {
            let template = build_dispatch_stage(i + 1, t_max, config, xi)?;
            let label = year.labels.get(i).cloned().unwrap_or_default();
            parent = tree.place(template, i + 1, label, Some(parent), None, w)?;
        }
    }
    tree.result(root)
}

/// Capacity and dispatch co-optimized for one year alone.
pub fn single_year_deterministic(config: &ModelConfig, year: &WeatherPath) -> Result<BenchmarkResult, BenchmarkError> {
    perfect_foresight(config, core::slice::from_ref(year))
}
