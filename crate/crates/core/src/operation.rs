//! Per-period economic dispatch with derated capacities, and the optimality
//! cut built from its capacity-row duals.

use crate::benders::{BendersCut, CutKind};
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::model::{BuildLevels, SystemSpec};
use crate::numeric::CompensatedSum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationResult {
    pub period: usize,
    /// Dispatch plus shedding cost of the period, $.
    pub cost: f64,
    /// MW per generator.
    pub dispatch: Vec<f64>,
    pub shed: f64,
    /// Dual of `g_j <= derated_j * x_j` per generator (non-positive).
    pub cap_duals: Vec<f64>,
}

/// `min sum d_j g_j + h r` s.t. `sum g_j + r = D`, `g_j <= derated_j * x_j`.
pub fn operation_program<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
) -> Result<LinearProgram> {
    spec.check_plan(plan)?;
    if period >= spec.periods() {
        return Err(Error::Instance(format!("period {period} out of range")));
    }
    let gens = spec.generators();
    let mut p = LinearProgram::new();
    let g: Vec<usize> = gens
        .iter()
        .map(|gen| p.add_var(gen.var_cost, 0.0, f64::INFINITY))
        .collect();
    let r = p.add_var(spec.shed_cost(), 0.0, f64::INFINITY);
    let mut balance: Vec<(usize, f64)> = g.iter().map(|&v| (v, 1.0)).collect();
    balance.push((r, 1.0));
    p.add_row(balance, Relation::Eq, spec.demand(period));
    for (j, gen) in gens.iter().enumerate() {
        let rhs = gen.derated_capacity() * spec.level(plan, j, period);
        p.add_row(vec![(g[j], 1.0)], Relation::Le, rhs);
    }
    Ok(p)
}

pub fn solve_operation<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
) -> Result<OperationResult> {
    let p = operation_program(spec, plan, period)?;
    let sol = lp::solve_lp(&p)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical {
            message: format!("dispatch program reported {:?}", sol.status),
            log: Vec::new(),
        });
    }
    let n = spec.generators().len();
    Ok(OperationResult {
        period,
        cost: sol.objective,
        dispatch: sol.primal[..n].to_vec(),
        shed: sol.primal[n],
        cap_duals: sol.duals[1..].to_vec(),
    })
}

/// Dispatch of every period, solved in parallel and returned in period order.
pub fn solve_all_periods<P: BuildLevels + Sync + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
) -> Result<Vec<OperationResult>> {
    (0..spec.periods())
        .into_par_iter()
        .map(|t| solve_operation(spec, plan, t))
        .collect()
}

/// Aggregated optimality cut `theta >= intercept + sum coeff[k][t] x[k][t]`
/// with `coeff = cap_dual * derated capacity`, tight at `plan`.
pub fn operation_cut<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    results: &[OperationResult],
) -> Result<BendersCut> {
    spec.check_plan(plan)?;
    if results.len() != spec.periods() || results.iter().enumerate().any(|(t, r)| r.period != t) {
        return Err(Error::Instance("need one operation result per period, in order".into()));
    }
    let mut coeffs = vec![vec![0.0; spec.periods()]; spec.candidates().len()];
    let mut intercept = CompensatedSum::new();
    for res in results {
        intercept.add(res.cost);
    }
    for (k, &j) in spec.candidates().iter().enumerate() {
        let derated = spec.generators()[j].derated_capacity();
        for (t, res) in results.iter().enumerate() {
            let c = res.cap_duals[j] * derated;
            let c = if c == 0.0 { 0.0 } else { c };
            coeffs[k][t] = c;
            intercept.add(-c * plan.level(k, t));
        }
    }
    Ok(BendersCut {
        kind: CutKind::Optimality,
        period: None,
        intercept: intercept.value(),
        coeffs,
        iteration: 0,
    })
}
