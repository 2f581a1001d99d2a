//! Sparse linear programs, a bounded revised primal simplex and a
//! best-bound branch-and-bound for binary variables.
//!
//! All problems are minimisations. Row duals follow the sensitivity
//! convention: `dual[i]` is the derivative of the optimal objective with
//! respect to `rhs[i]`, so `<=` rows have non-positive duals and `>=` rows
//! non-negative ones.

mod dump;
mod factor;
mod mip;
mod simplex;

pub use dump::write_lp_format;
pub use mip::solve_mip_with;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    kind: Vec<VarKind>,
    rows: Vec<Row>,
    var_names: Vec<Option<String>>,
    row_names: Vec<Option<String>>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a continuous variable and returns its column index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.kind.push(VarKind::Continuous);
        self.var_names.push(None);
        self.cost.len() - 1
    }

    /// Adds a `[0, 1]` integral variable.
    pub fn add_binary(&mut self, cost: f64) -> usize {
        let j = self.add_var(cost, 0.0, 1.0);
        self.kind[j] = VarKind::Binary;
        j
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> usize {
        self.rows.push(Row {
            coeffs,
            relation,
            rhs,
        });
        self.row_names.push(None);
        self.rows.len() - 1
    }

    pub fn set_var_name(&mut self, var: usize, name: impl Into<String>) {
        self.var_names[var] = Some(name.into());
    }

    pub fn set_row_name(&mut self, row: usize, name: impl Into<String>) {
        self.row_names[row] = Some(name.into());
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    /// Drops integrality marks, keeping bounds.
    pub fn relax(&mut self) {
        self.kind.fill(VarKind::Continuous);
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kind
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.kind
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn has_integers(&self) -> bool {
        self.binaries().next().is_some()
    }

    pub fn var_name(&self, var: usize) -> String {
        self.var_names[var]
            .clone()
            .unwrap_or_else(|| format!("x{var}"))
    }

    pub fn row_name(&self, row: usize) -> String {
        self.row_names[row]
            .clone()
            .unwrap_or_else(|| format!("c{row}"))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(Error::Instance(format!("variable {} has empty bounds", self.var_name(j))));
            }
            if !self.cost[j].is_finite() {
                return Err(Error::Instance(format!("variable {} has non-finite cost", self.var_name(j))));
            }
            if self.kind[j] == VarKind::Binary && (self.lower[j] < 0.0 || self.upper[j] > 1.0) {
                return Err(Error::Instance(format!("binary {} has bounds outside [0, 1]", self.var_name(j))));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Instance(format!("row {} has non-finite rhs", self.row_name(i))));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(Error::Instance(format!("row {} has a bad coefficient", self.row_name(i))));
                }
            }
        }
        Ok(())
    }

    /// Objective value of `x`.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One per row; see the module docs for the sign convention.
    pub duals: Vec<f64>,
    /// `cost - A^T dual`, one per variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Branch-and-bound nodes explored below the root (0 for pure LPs).
    pub nodes: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_solution(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            nodes: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_feas: f64,
    /// Relative optimality tolerance.
    pub tol_opt: f64,
    pub tol_int: f64,
    /// Relative gap at which a branch-and-bound node is pruned.
    pub mip_gap: f64,
    pub node_limit: usize,
    /// `None` picks a limit proportional to problem size.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: 1e-7,
            tol_opt: 1e-7,
            tol_int: 1e-6,
            mip_gap: 1e-10,
            node_limit: 200_000,
            max_iterations: None,
            degenerate_streak: 50,
        }
    }
}

/// Solves a continuous LP.
pub fn solve_lp(p: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(p, &SolverOptions::default())
}

pub fn solve_lp_with(p: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    if p.has_integers() {
        return Err(Error::Instance("solve_lp called on a problem with binaries".into()));
    }
    p.validate()?;
    simplex::solve(p, p.lower(), p.upper(), opts)
}

/// Solves a problem whose integer variables are all binary.
pub fn solve_mip(p: &LinearProgram) -> Result<LpSolution> {
    solve_mip_with(p, &SolverOptions::default())
}
