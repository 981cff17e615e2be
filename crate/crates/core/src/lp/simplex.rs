//! Bounded-variable primal revised simplex.
//!
//! Every row `a_i x (<=,>=,=) b_i` is rewritten as `a_i x - r_i = 0` with the
//! row activity `r_i` carrying the bounds, so the working problem is
//! `[A | -I] z = 0, lo <= z <= hi`. The all-slack basis is always available
//! as a starting point. Phase 1 minimizes the sum of bound violations of the
//! basic variables; phase 2 minimizes the (scaled) objective.
//!
//! The basis is kept as a sparse LU factorization updated in product form
//! and refactorized periodically. Rows and columns are equilibrated with powers
//! of two, so unscaling is exact.

use alloc::vec;
use alloc::vec::Vec;

use super::lu::{Factor, Singular};
use super::{LpError, LpInstance, LpSolution, LpStatus, Sense};
use crate::math;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Primal feasibility tolerance on the scaled problem.
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance on the scaled problem.
    pub optimality_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    /// Iteration cap; `0` picks a cap proportional to the problem size.
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: 0,
            bland_after: 1000,
            refactor_every: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// Status of every structural column and every row activity.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Basis {
    pub columns: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

impl Basis {
    /// Extends the basis for rows appended after it was produced; the new
    /// row activities enter the basis.
    pub fn with_appended_rows(&self, total_rows: usize) -> Basis {
        let mut rows = self.rows.clone();
        rows.resize(total_rows, VarStatus::Basic);
        Basis { columns: self.columns.clone(), rows }
    }
}

pub fn solve(lp: &LpInstance) -> Result<LpSolution, LpError> {
    solve_with(lp, &SolverOptions::default(), None)
}

/// Solves `lp`, optionally starting from `warm`.
///
/// A warm basis that does not match the instance dimensions, or whose basis
/// matrix is singular, is repaired towards the slack basis.
pub fn solve_with(lp: &LpInstance, opts: &SolverOptions, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    let mut work = Work::new(lp, opts);
    work.initialize(warm);
    let status = work.run()?;
    Ok(work.into_solution(lp, status))
}

const SLACK: usize = usize::MAX;

struct Work<'a> {
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    lu: Factor,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    obj_scale: f64,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Work<'a> {
    fn new(lp: &LpInstance, opts: &'a SolverOptions) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();

        // Merge duplicate terms per (row, col) and build column-major storage.
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, row) in lp.rows().iter().enumerate() {
            for &(v, a) in &row.terms {
                entries.push((v.0, i, a));
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 != 0.0);

        let (row_scale, col_scale) = equilibrate(m, n, &merged);

        let mut col_start = vec![0usize; n + 1];
        for e in &merged {
            col_start[e.0 + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let mut col_row = Vec::with_capacity(merged.len());
        let mut col_val = Vec::with_capacity(merged.len());
        for &(j, i, a) in &merged {
            col_row.push(i);
            col_val.push(a * row_scale[i] * col_scale[j]);
        }

        let max_cost = lp.objective().iter().zip(&col_scale).map(|(c, s)| (c * s).abs()).fold(0.0, f64::max);
        let obj_scale = if max_cost > 0.0 { math::pow2(math::round(math::log2(max_cost)) as i32) } else { 1.0 };

        let total = n + m;
        let mut cost = vec![0.0; total];
        let mut lo = vec![0.0; total];
        let mut hi = vec![0.0; total];
        for j in 0..n {
            let s = col_scale[j];
            cost[j] = lp.objective()[j] * s / obj_scale;
            lo[j] = lp.lower_bounds()[j] / s;
            hi[j] = lp.upper_bounds()[j] / s;
        }
        for (i, row) in lp.rows().iter().enumerate() {
            let b = row.rhs * row_scale[i];
            let (l, h) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo[n + i] = l;
            hi[n + i] = h;
        }

        Self {
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            cost,
            lo,
            hi,
            x: vec![0.0; total],
            status: vec![VarStatus::Basic; total],
            head: Vec::new(),
            lu: Factor::default(),
            row_scale,
            col_scale,
            obj_scale,
            iterations: 0,
            since_refactor: 0,
        }
    }

    fn default_nonbasic(&self, j: usize) -> VarStatus {
        if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else if self.hi[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn place_nonbasic(&mut self, j: usize, requested: VarStatus) {
        let st = match requested {
            VarStatus::AtLower if self.lo[j].is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if self.hi[j].is_finite() => VarStatus::AtUpper,
            VarStatus::Free if !self.lo[j].is_finite() && !self.hi[j].is_finite() => VarStatus::Free,
            _ => self.default_nonbasic(j),
        };
        self.status[j] = st;
        self.x[j] = match st {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            _ => 0.0,
        };
    }

    fn initialize(&mut self, warm: Option<&Basis>) {
        let (n, m) = (self.n, self.m);
        let usable = warm.filter(|b| {
            b.columns.len() == n
                && b.rows.len() == m
                && b.columns.iter().chain(&b.rows).filter(|s| **s == VarStatus::Basic).count() == m
        });
        match usable {
            Some(b) => {
                for j in 0..n + m {
                    let st = if j < n { b.columns[j] } else { b.rows[j - n] };
                    if st == VarStatus::Basic {
                        self.status[j] = VarStatus::Basic;
                    } else {
                        self.place_nonbasic(j, st);
                    }
                }
            }
            None => {
                for j in 0..n {
                    let st = self.default_nonbasic(j);
                    self.place_nonbasic(j, st);
                }
                for i in 0..m {
                    self.status[n + i] = VarStatus::Basic;
                }
            }
        }
        self.head = (0..n + m).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        self.refactor();
        self.recompute_basics();
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (range, slack_row) =
            if j < self.n { (self.col_start[j]..self.col_start[j + 1], SLACK) } else { (0..0, j - self.n) };
        range.map(move |k| (self.col_row[k], self.col_val[k])).chain((slack_row != SLACK).then_some((slack_row, -1.0)))
    }

    /// Sparse LU of the basis. Positions whose column is (numerically)
    /// dependent are replaced by slacks of uncovered rows, and the
    /// factorization is repeated.
    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.head.iter().map(|&j| self.column(j).collect()).collect();
            match Factor::new(m, cols) {
                Ok(f) => {
                    self.lu = f;
                    return;
                }
                Err(Singular { positions, rows }) => {
                    for (pos, r) in positions.into_iter().zip(rows) {
                        let out = self.head[pos];
                        let st = self.default_nonbasic(out);
                        self.place_nonbasic(out, st);
                        let slack = self.n + r;
                        self.status[slack] = VarStatus::Basic;
                        self.head[pos] = slack;
                    }
                }
            }
        }
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (r, a) in self.column(j) {
                    rhs[r] -= a * xj;
                }
            }
        }
        let mut xb = self.apply_binv(&rhs);
        // One round of iterative refinement.
        let mut resid = rhs;
        for (pos, &j) in self.head.iter().enumerate() {
            for (r, a) in self.column(j) {
                resid[r] -= a * xb[pos];
            }
        }
        let corr = self.apply_binv(&resid);
        for (v, c) in xb.iter_mut().zip(corr) {
            *v += c;
        }
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn apply_binv(&self, v: &[f64]) -> Vec<f64> {
        self.lu.ftran(v.to_vec())
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.m];
        for (r, a) in self.column(j) {
            b[r] += a;
        }
        self.lu.ftran(b)
    }

    fn duals_for(&self, cb: &[f64]) -> Vec<f64> {
        self.lu.btran(cb.to_vec())
    }

    fn refine_duals(&self, cb: &[f64], y: &mut [f64]) {
        // r_pos = c_B[pos] - a_head[pos] . y, then y += r^T B^{-1}
        let resid: Vec<f64> = self
            .head
            .iter()
            .enumerate()
            .map(|(pos, &j)| cb[pos] - self.column(j).map(|(r, a)| a * y[r]).sum::<f64>())
            .collect();
        let corr = self.duals_for(&resid);
        for (v, c) in y.iter_mut().zip(corr) {
            *v += c;
        }
    }

    fn reduced_cost(&self, j: usize, cj: f64, y: &[f64]) -> f64 {
        cj - self.column(j).map(|(r, a)| a * y[r]).sum::<f64>()
    }

    fn pivot_update(&mut self, alpha: &[f64], r: usize) {
        self.lu.update(alpha, r);
    }

    fn phase_costs(&self) -> (bool, Vec<f64>) {
        let tol = self.opts.feasibility_tol;
        let mut infeasible = false;
        let cb: Vec<f64> = self
            .head
            .iter()
            .map(|&j| {
                if self.x[j] < self.lo[j] - tol {
                    infeasible = true;
                    -1.0
                } else if self.x[j] > self.hi[j] + tol {
                    infeasible = true;
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        if infeasible {
            (true, cb)
        } else {
            (false, self.head.iter().map(|&j| self.cost[j]).collect())
        }
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let total = self.n + self.m;
        let cap = if self.opts.max_iterations > 0 { self.opts.max_iterations } else { 20_000 + 50 * total };
        let otol = self.opts.optimality_tol;
        let mut degenerate_run = 0usize;
        let mut pending_check = false;

        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
                self.recompute_basics();
            }
            let (phase1, cb) = self.phase_costs();
            let y = self.duals_for(&cb);
            let bland = degenerate_run >= self.opts.bland_after;

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for j in 0..total {
                let st = self.status[j];
                if st == VarStatus::Basic || self.lo[j] == self.hi[j] {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = self.reduced_cost(j, cj, &y);
                let dir = match st {
                    VarStatus::AtLower if d < -otol => 1.0,
                    VarStatus::AtUpper if d > otol => -1.0,
                    VarStatus::Free if d.abs() > otol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if d.abs() > best_score {
                    best_score = d.abs();
                    entering = Some((j, dir));
                }
            }

            let Some((q, dir)) = entering else {
                if self.since_refactor > 0 && !pending_check {
                    pending_check = true;
                    self.refactor();
                    self.recompute_basics();
                    continue;
                }
                return Ok(if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal });
            };
            pending_check = false;

            self.iterations += 1;
            if self.iterations > cap {
                return Err(LpError::NumericalFailure(alloc::format!("iteration limit {cap} reached")));
            }

            let alpha = self.ftran(q);
            let (leave, step, flip) = self.ratio_test(q, dir, &alpha, bland);
            if leave.is_none() && !flip {
                if phase1 {
                    return Err(LpError::NumericalFailure("unbounded phase-1 direction".into()));
                }
                if self.since_refactor > 0 {
                    self.refactor();
                    self.recompute_basics();
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            }

            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            self.x[q] += dir * step;
            for (pos, &j) in self.head.iter().enumerate() {
                if alpha[pos] != 0.0 {
                    self.x[j] -= dir * step * alpha[pos];
                }
            }
            if flip {
                let st = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.place_nonbasic(q, st);
                continue;
            }
            let (r, target_upper) = leave.expect("leaving row");
            let out = self.head[r];
            if target_upper {
                self.status[out] = VarStatus::AtUpper;
                self.x[out] = self.hi[out];
            } else {
                self.status[out] = VarStatus::AtLower;
                self.x[out] = self.lo[out];
            }
            self.status[q] = VarStatus::Basic;
            self.head[r] = q;
            self.pivot_update(&alpha, r);
            self.since_refactor += 1;
        }
    }

    /// Returns (leaving position and whether it leaves at its upper bound,
    /// step length, bound flip of the entering variable).
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> (Option<(usize, bool)>, f64, bool) {
        let ftol = self.opts.feasibility_tol;
        let ptol = self.opts.pivot_tol;

        // (position, exact ratio, relaxed ratio, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= ptol {
                continue;
            }
            let j = self.head[pos];
            let delta = -dir * a;
            let xj = self.x[j];
            // Phase-1 rule: an infeasible basic variable blocks where it
            // becomes feasible and never blocks while moving away.
            let (bound, upper) = if delta < 0.0 {
                if xj > self.hi[j] + ftol {
                    (self.hi[j], true)
                } else if xj < self.lo[j] - ftol || !self.lo[j].is_finite() {
                    continue;
                } else {
                    (self.lo[j], false)
                }
            } else if xj < self.lo[j] - ftol {
                (self.lo[j], false)
            } else if xj > self.hi[j] + ftol || !self.hi[j].is_finite() {
                continue;
            } else {
                (self.hi[j], true)
            };
            let dist = (xj - bound).abs();
            let exact =
                if (delta < 0.0 && xj <= bound) || (delta > 0.0 && xj >= bound) { 0.0 } else { dist / delta.abs() };
            let relaxed = if (delta < 0.0 && xj < bound) || (delta > 0.0 && xj > bound) {
                // already beyond the bound (within tolerance)
                (ftol - dist).max(0.0) / delta.abs()
            } else {
                (dist + ftol) / delta.abs()
            };
            cands.push((pos, exact, relaxed, upper));
        }

        let range = self.hi[q] - self.lo[q];

        if bland {
            let mut best: Option<(usize, f64, bool)> = None;
            for &(pos, exact, _, upper) in &cands {
                let better = match best {
                    None => true,
                    Some((bp, bt, _)) => exact < bt || (exact == bt && self.head[pos] < self.head[bp]),
                };
                if better {
                    best = Some((pos, exact, upper));
                }
            }
            return match best {
                Some((_, t, _)) if range.is_finite() && range <= t => (None, range, true),
                Some((pos, t, upper)) => (Some((pos, upper)), t, false),
                None if range.is_finite() => (None, range, true),
                None => (None, 0.0, false),
            };
        }

        let tmax = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        if range.is_finite() && range <= tmax {
            return (None, range, true);
        }
        if cands.is_empty() {
            return (None, 0.0, false);
        }
        let mut best: Option<(usize, f64, bool)> = None;
        let mut best_abs = 0.0;
        for &(pos, exact, _, upper) in &cands {
            if exact <= tmax {
                let a = alpha[pos].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some((pos, exact, upper));
                }
            }
        }
        match best {
            Some((pos, t, upper)) => (Some((pos, upper)), t, false),
            None => (None, 0.0, false),
        }
    }

    fn into_solution(self, lp: &LpInstance, status: LpStatus) -> LpSolution {
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                primal: Vec::new(),
                objective: match status {
                    LpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                row_activity: Vec::new(),
                basis: None,
                iterations: self.iterations,
            };
        }
        let (n, m) = (self.n, self.m);
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let mut y = self.duals_for(&cb);
        if m > 0 {
            self.refine_duals(&cb, &mut y);
        }

        let primal: Vec<f64> = (0..n)
            .map(|j| {
                let v = self.x[j] * self.col_scale[j];
                // snap nonbasic values onto their exact bounds
                match self.status[j] {
                    VarStatus::AtLower => lp.lower_bounds()[j],
                    VarStatus::AtUpper => lp.upper_bounds()[j],
                    _ => v,
                }
            })
            .collect();
        let reduced_costs: Vec<f64> = (0..n)
            .map(|j| {
                if self.status[j] == VarStatus::Basic {
                    0.0
                } else {
                    self.reduced_cost(j, self.cost[j], &y) * self.obj_scale / self.col_scale[j]
                }
            })
            .collect();
        let duals: Vec<f64> =
            (0..m)
                .map(|i| {
                    if self.status[n + i] == VarStatus::Basic {
                        0.0
                    } else {
                        y[i] * self.obj_scale * self.row_scale[i]
                    }
                })
                .collect();
        let row_activity: Vec<f64> =
            (0..m).map(|i| lp.rows()[i].terms.iter().map(|(v, a)| a * primal[v.0]).sum()).collect();
        let objective = lp.evaluate(&primal);
        let basis = Basis { columns: self.status[..n].to_vec(), rows: self.status[n..].to_vec() };
        LpSolution {
            status,
            primal,
            objective,
            duals,
            reduced_costs,
            row_activity,
            basis: Some(basis),
            iterations: self.iterations,
        }
    }
}

/// Geometric-mean equilibration with power-of-two factors.
fn equilibrate(m: usize, n: usize, entries: &[(usize, usize, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _ in 0..4 {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for &(j, i, a) in entries {
            let v = (a * cs[j]).abs();
            rmin[i] = rmin[i].min(v);
            rmax[i] = rmax[i].max(v);
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                rs[i] = math::pow2(-(math::round(math::log2(math::sqrt(rmin[i] * rmax[i]))) as i32));
            }
        }
        let mut cmin = vec![f64::INFINITY; n];
        let mut cmax = vec![0.0f64; n];
        for &(j, i, a) in entries {
            let v = (a * rs[i]).abs();
            cmin[j] = cmin[j].min(v);
            cmax[j] = cmax[j].max(v);
        }
        for j in 0..n {
            if cmax[j] > 0.0 {
                cs[j] = math::pow2(-(math::round(math::log2(math::sqrt(cmin[j] * cmax[j]))) as i32));
            }
        }
    }
    (rs, cs)
}
