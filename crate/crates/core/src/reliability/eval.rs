//! Metric values together with plan subgradients for feasibility cuts.

use super::metrics::{check_alpha, unit_capacities, ShedDistribution, SHED_ZERO_TOL};
use super::StateSet;
use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::model::{BuildLevels, Metric, SystemSpec};
use crate::numeric::CompensatedSum;
use serde::{Deserialize, Serialize};

/// A metric value at a plan and its subgradient with respect to the build
/// levels of one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEvaluation {
    pub metric: Metric,
    pub period: usize,
    pub value: f64,
    /// Per candidate slot: d metric / d x[candidate][period]. Never positive.
    pub subgradient: Vec<f64>,
    /// Standard error of `value` for sampled estimates.
    pub standard_error: Option<f64>,
    pub samples: usize,
}

/// `-sum_s mass_s * up_js * capacity_j` for each candidate.
fn weighted_capacity_subgradient(spec: &SystemSpec, states: &StateSet, mass: &[f64]) -> Vec<f64> {
    spec.candidates()
        .iter()
        .map(|&j| {
            let cap = spec.generators()[j].capacity_mw;
            let mut acc = CompensatedSum::new();
            for (s, &m) in mass.iter().enumerate() {
                if m != 0.0 && states.up(s)[j] {
                    acc.add(m);
                }
            }
            let g = -acc.value() * cap;
            if g == 0.0 { 0.0 } else { g }
        })
        .collect()
}

/// EPNS and its subgradient over the shedding set
/// `{ s : shedding_s > SHED_ZERO_TOL }`.
pub fn epns_eval<P: BuildLevels + Sync + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
) -> Result<RiskEvaluation> {
    let dist = ShedDistribution::evaluate(spec, plan, period, states)?;
    let mass: Vec<f64> = dist
        .values
        .iter()
        .zip(&dist.weights)
        .map(|(&r, &w)| if r > SHED_ZERO_TOL { w } else { 0.0 })
        .collect();
    Ok(RiskEvaluation {
        metric: Metric::Epns,
        period,
        value: dist.epns(),
        subgradient: weighted_capacity_subgradient(spec, states, &mass),
        standard_error: None,
        samples: states.len(),
    })
}

/// Solution of the CVaR linear program for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarLpResult {
    pub value: f64,
    /// Optimal threshold `b` (an alpha-quantile of shedding).
    pub threshold: f64,
    /// Duals of the shedding rows `r_s >= D - available_s`.
    pub shed_duals: Vec<f64>,
    /// Duals of the excess rows `y_s >= r_s - b`.
    pub excess_duals: Vec<f64>,
}

/// Builds `min b + (1/alpha) sum_s p_s y_s` subject to `r_s >= D - available_s`,
/// `y_s >= r_s - b`, all variables non-negative. Shedding rows come first,
/// then excess rows. Returns the program and the `b` column.
pub fn cvar_program<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
    alpha: f64,
) -> Result<(LinearProgram, usize)> {
    check_alpha(alpha)?;
    if states.is_empty() {
        return Err(Error::Instance("CVaR program needs at least one state".into()));
    }
    let caps = unit_capacities(spec, plan, period)?;
    let demand = spec.demand(period);
    let mut p = LinearProgram::new();
    let b = p.add_var(1.0, 0.0, f64::INFINITY);
    p.set_var_name(b, "b");
    let n = states.len();
    let r: Vec<usize> = (0..n).map(|_| p.add_var(0.0, 0.0, f64::INFINITY)).collect();
    let y: Vec<usize> = states
        .weights()
        .iter()
        .map(|w| p.add_var(w / alpha, 0.0, f64::INFINITY))
        .collect();
    for s in 0..n {
        let available: f64 = caps
            .iter()
            .zip(states.up(s))
            .filter(|(_, &u)| u)
            .map(|(c, _)| c)
            .sum();
        p.add_row(vec![(r[s], 1.0)], Relation::Ge, demand - available);
    }
    for s in 0..n {
        p.add_row(vec![(y[s], 1.0), (r[s], -1.0), (b, 1.0)], Relation::Ge, 0.0);
    }
    Ok((p, b))
}

pub fn cvar_lp<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
    alpha: f64,
) -> Result<CvarLpResult> {
    let (p, b) = cvar_program(spec, plan, period, states, alpha)?;
    let sol = lp::solve_lp(&p)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical {
            message: format!("CVaR program reported {:?}", sol.status),
            log: Vec::new(),
        });
    }
    let n = states.len();
    Ok(CvarLpResult {
        value: sol.objective,
        threshold: sol.primal[b],
        shed_duals: sol.duals[..n].to_vec(),
        excess_duals: sol.duals[n..].to_vec(),
    })
}

/// CVaR from the linear program, with subgradient `-sum_s v_s up_js capacity_j`
/// taken from the shedding-row duals `v_s`.
pub fn cvar_eval<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
    alpha: f64,
) -> Result<RiskEvaluation> {
    let res = cvar_lp(spec, plan, period, states, alpha)?;
    let mass: Vec<f64> = res.shed_duals.iter().map(|v| v.max(0.0)).collect();
    Ok(RiskEvaluation {
        metric: Metric::Cvar,
        period,
        value: res.value,
        subgradient: weighted_capacity_subgradient(spec, states, &mass),
        standard_error: None,
        samples: states.len(),
    })
}
