//! Linear programs with labelled rows and columns, solved by a
//! bounded-variable revised simplex method.
//!
//! Sign conventions for duals follow the "shadow price of the right-hand
//! side" reading: under minimization the dual of a binding `>=` row is
//! nonnegative, the dual of a binding `<=` row is nonpositive and the dual of
//! an equality row is free. In every case `dual[i]` is the rate of change of
//! the optimal objective with respect to `rhs[i]`.

mod lu;
mod simplex;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

pub use simplex::{solve, solve_with, Basis, SolverOptions, VarStatus};

/// Column handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Row handle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn code(self) -> char {
        match self {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LpError {
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown row `{0}`")]
    UnknownRow(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("inconsistent bounds on `{label}`: {lower} > {upper}")]
    InvalidBounds { label: String, lower: f64, upper: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub label: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem `min c'x  s.t.  rows, lower <= x <= upper`.
///
/// Instances are plain values: build them once, clone when a variant is
/// needed, and share them freely for reading.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpInstance {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    var_labels: Vec<String>,
    rows: Vec<Row>,
    var_index: BTreeMap<String, usize>,
    row_index: BTreeMap<String, usize>,
}

impl LpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_variable(
        &mut self,
        label: impl Into<String>,
        cost: f64,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, LpError> {
        let label = label.into();
        if !cost.is_finite() || lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY
        {
            return Err(LpError::NonFinite(label));
        }
        if lower > upper {
            return Err(LpError::InvalidBounds { label, lower, upper });
        }
        if self.var_index.contains_key(&label) {
            return Err(LpError::DuplicateLabel(label));
        }
        let id = self.objective.len();
        self.var_index.insert(label.clone(), id);
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_labels.push(label);
        Ok(VarId(id))
    }

    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, LpError> {
        let label = label.into();
        if !rhs.is_finite() || terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(LpError::NonFinite(label));
        }
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.num_vars()) {
            return Err(LpError::UnknownVariable(alloc::format!("#{} in row {}", v.0, label)));
        }
        if self.row_index.contains_key(&label) {
            return Err(LpError::DuplicateLabel(label));
        }
        let id = self.rows.len();
        self.row_index.insert(label.clone(), id);
        self.rows.push(Row { label, terms, sense, rhs });
        Ok(RowId(id))
    }

    /// Returns a copy with one more row, referencing variables by label.
    pub fn append_constraint(
        &self,
        label: impl Into<String>,
        terms: &[(&str, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<LpInstance, LpError> {
        let mut resolved = Vec::with_capacity(terms.len());
        for (name, coef) in terms {
            let var = self.var(name).ok_or_else(|| LpError::UnknownVariable(String::from(*name)))?;
            resolved.push((var, *coef));
        }
        let mut out = self.clone();
        out.add_row(label, resolved, sense, rhs)?;
        Ok(out)
    }

    pub fn var(&self, label: &str) -> Option<VarId> {
        self.var_index.get(label).copied().map(VarId)
    }

    pub fn row(&self, label: &str) -> Option<RowId> {
        self.row_index.get(label).copied().map(RowId)
    }

    pub fn var_label(&self, var: VarId) -> &str {
        &self.var_labels[var.0]
    }

    pub fn row_label(&self, row: RowId) -> &str {
        &self.rows[row.0].label
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row_data(&self, row: RowId) -> &Row {
        &self.rows[row.0]
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        debug_assert!(rhs.is_finite());
        self.rows[row.0].rhs = rhs;
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        debug_assert!(cost.is_finite());
        self.objective[var.0] = cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), LpError> {
        if lower > upper {
            return Err(LpError::InvalidBounds { label: self.var_labels[var.0].clone(), lower, upper });
        }
        self.lower[var.0] = lower;
        self.upper[var.0] = upper;
        Ok(())
    }

    /// Adds `coef * var` to an existing row.
    pub fn add_term(&mut self, row: RowId, var: VarId, coef: f64) {
        debug_assert!(var.0 < self.num_vars() && coef.is_finite());
        self.rows[row.0].terms.push((var, coef));
    }

    /// Objective value of an arbitrary primal point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Activity `a_i . x` of a row at an arbitrary point.
    pub fn row_activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].terms.iter().map(|(v, a)| a * x[v.0]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let act = self.row_activity(RowId(i), x);
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Plain-text fixed-format dump, one record per line.
    ///
    /// ```text
    /// LPDUMP 1 <nvars> <nrows>
    /// VAR <label> <cost> <lower> <upper>
    /// ROW <label> <L|G|E> <rhs> <nnz> <var>:<coef> ...
    /// ```
    ///
    /// Numbers use 17 significant digits so the dump round-trips exactly.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "LPDUMP 1 {} {}", self.num_vars(), self.num_rows());
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "VAR {} {:.16e} {:.16e} {:.16e}",
                self.var_labels[j], self.objective[j], self.lower[j], self.upper[j]
            );
        }
        for row in &self.rows {
            let _ = write!(out, "ROW {} {} {:.16e} {}", row.label, row.sense.code(), row.rhs, row.terms.len());
            for (v, a) in &row.terms {
                let _ = write!(out, " {}:{:.16e}", self.var_labels[v.0], a);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. Vectors are empty unless `status` is `Optimal`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub row_activity: Vec<f64>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }

    /// Dual objective `sum_i y_i b_i + sum_j d_j x_j` over nonbasic bounds,
    /// evaluated against the instance it came from.
    pub fn dual_objective(&self, lp: &LpInstance) -> f64 {
        let rows: f64 = lp.rows.iter().zip(&self.duals).map(|(r, y)| r.rhs * y).sum();
        let cols: f64 = self.reduced_costs.iter().zip(&self.primal).map(|(d, x)| d * x).sum();
        rows + cols
    }
}
