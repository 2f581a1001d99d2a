//! Benders decomposition of the reliability-constrained expansion problem.
//!
//! The master chooses binary builds `x[k][t]` and an epigraph variable
//! `theta` for operation cost. Each trial plan is priced by the dispatch
//! subproblem (optimality cut) and checked against the reliability limit
//! (feasibility cut per violating period). Only convex metrics (EPNS, CVaR)
//! are accepted.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpStatus, Relation};
use crate::model::{
    plan_invest_cost, BuildLevels, InvestmentPlan, Metric, PlanReport, ReliabilityCriterion, SystemSpec,
};
use crate::operation::{operation_cut, solve_all_periods};
use crate::planner::evaluate_plan;
use crate::reliability::{cvar_eval, epns_eval, RiskEvaluation, StateSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CutKind {
    Optimality,
    Feasibility { metric: Metric, limit: f64 },
}

/// A hyperplane `intercept + sum coeffs[k][t] * x[k][t]` over the plan.
/// Optimality cuts bound `theta` from below; feasibility cuts must stay
/// at or below `limit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersCut {
    pub kind: CutKind,
    pub period: Option<usize>,
    pub intercept: f64,
    pub coeffs: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl BendersCut {
    pub fn evaluate<P: BuildLevels + ?Sized>(&self, plan: &P) -> f64 {
        let mut v = self.intercept;
        for (k, row) in self.coeffs.iter().enumerate() {
            for (t, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    v += c * plan.level(k, t);
                }
            }
        }
        v
    }

    /// Linearisation of a period metric around `plan`:
    /// `value + g . (x - plan) <= limit`.
    pub fn feasibility<P: BuildLevels + ?Sized>(
        spec: &SystemSpec,
        plan: &P,
        eval: &RiskEvaluation,
        limit: f64,
    ) -> Self {
        let t = eval.period;
        let mut coeffs = vec![vec![0.0; spec.periods()]; spec.candidates().len()];
        let mut intercept = eval.value;
        for (k, &g) in eval.subgradient.iter().enumerate() {
            coeffs[k][t] = g;
            intercept -= g * plan.level(k, t);
        }
        BendersCut {
            kind: CutKind::Feasibility {
                metric: eval.metric,
                limit,
            },
            period: Some(t),
            intercept,
            coeffs,
            iteration: 0,
        }
    }

    pub fn is_satisfied_by<P: BuildLevels + ?Sized>(&self, plan: &P, theta: f64, tol: f64) -> bool {
        match self.kind {
            CutKind::Optimality => theta >= self.evaluate(plan) - tol,
            CutKind::Feasibility { limit, .. } => self.evaluate(plan) <= limit + tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub plan: InvestmentPlan,
    pub theta: f64,
    pub invest_cost: f64,
    /// Master objective: investment plus `theta`.
    pub lower_bound: f64,
}

/// Master MIP over binary builds. `base`, when given, forces its builds to stay.
pub fn master_program(
    spec: &SystemSpec,
    cuts: &[BendersCut],
    base: Option<&InvestmentPlan>,
) -> Result<(LinearProgram, Vec<Vec<usize>>, usize)> {
    let periods = spec.periods();
    let mut p = LinearProgram::new();
    let mut x = Vec::with_capacity(spec.candidates().len());
    for k in 0..spec.candidates().len() {
        let gen = spec.candidate(k);
        let first = spec.first_buildable(k);
        let row: Vec<usize> = (0..periods)
            .map(|t| {
                let cost = if t + 1 == periods { gen.invest_cost } else { 0.0 };
                let v = p.add_binary(cost);
                p.set_var_name(v, format!("x_{}_{}", gen.id, t + 1));
                if t < first {
                    p.set_bounds(v, 0.0, 0.0);
                } else if base.is_some_and(|b| b.is_built(k, t)) {
                    p.set_bounds(v, 1.0, 1.0);
                }
                v
            })
            .collect();
        for t in 0..periods.saturating_sub(1) {
            let r = p.add_row(vec![(row[t], 1.0), (row[t + 1], -1.0)], Relation::Le, 0.0);
            p.set_row_name(r, format!("keep_{}_{}", gen.id, t + 1));
        }
        x.push(row);
    }
    let theta = p.add_var(1.0, 0.0, f64::INFINITY);
    p.set_var_name(theta, "theta");

    for (i, cut) in cuts.iter().enumerate() {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for (k, row) in cut.coeffs.iter().enumerate() {
            for (t, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    coeffs.push((x[k][t], c));
                }
            }
        }
        let r = match cut.kind {
            CutKind::Optimality => {
                for c in &mut coeffs {
                    c.1 = -c.1;
                }
                coeffs.push((theta, 1.0));
                p.add_row(coeffs, Relation::Ge, cut.intercept)
            }
            CutKind::Feasibility { limit, .. } => {
                p.add_row(coeffs, Relation::Le, limit - cut.intercept)
            }
        };
        p.set_row_name(r, format!("cut{}", i + 1));
    }
    Ok((p, x, theta))
}

pub fn solve_master(
    spec: &SystemSpec,
    cuts: &[BendersCut],
    base: Option<&InvestmentPlan>,
) -> Result<MasterSolution> {
    let (p, x, theta) = master_program(spec, cuts, base)?;
    let sol = lp::solve_mip(&p)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Unsatisfiable(
                "no investment plan satisfies the accumulated feasibility cuts".into(),
            ))
        }
        LpStatus::Unbounded => {
            return Err(Error::Numerical {
                message: "master problem unbounded".into(),
                log: Vec::new(),
            })
        }
    }
    let built = x
        .iter()
        .map(|row| row.iter().map(|&v| sol.primal[v] > 0.5).collect())
        .collect();
    let plan = InvestmentPlan::new(spec, built)?;
    let invest_cost = plan_invest_cost(spec, &plan)?;
    let theta = sol.primal[theta];
    Ok(MasterSolution {
        plan,
        theta,
        invest_cost,
        lower_bound: invest_cost + theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BendersOptions {
    /// Relative gap `(UB - LB) / max(1, UB)` at which the loop stops.
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Absolute tolerance on the reliability limit, in the metric's unit.
    pub tol_feas: f64,
    /// Relative tolerance for adding an optimality cut.
    pub tol_opt: f64,
}

impl Default for BendersOptions {
    fn default() -> Self {
        BendersOptions {
            tol_gap: 1e-6,
            max_iter: 200,
            tol_feas: 1e-7,
            tol_opt: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub plan: InvestmentPlan,
    pub lower_bound: f64,
    /// `None` until a feasible plan has been seen.
    pub upper_bound: Option<f64>,
    pub invest_cost: f64,
    pub oper_cost: f64,
    pub theta: f64,
    /// Criterion metric per period at the trial plan.
    pub metric_values: Vec<f64>,
    pub feasible: bool,
    pub optimality_cut: bool,
    pub feasibility_cuts: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BendersLog {
    pub iterations: Vec<IterationRecord>,
}

impl BendersLog {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    /// Lower bounds never decrease and upper bounds never increase.
    pub fn bounds_are_monotone(&self) -> bool {
        self.iterations.windows(2).all(|w| {
            let lb_ok = w[1].lower_bound >= w[0].lower_bound;
            let ub_ok = match (w[0].upper_bound, w[1].upper_bound) {
                (Some(a), Some(b)) => b <= a,
                (Some(_), None) => false,
                _ => true,
            };
            lb_ok && ub_ok
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BendersOutcome {
    pub plan: InvestmentPlan,
    pub report: PlanReport,
    pub log: BendersLog,
    pub cuts: Vec<BendersCut>,
}

fn evaluate_metric(
    spec: &SystemSpec,
    plan: &InvestmentPlan,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
) -> Result<Vec<RiskEvaluation>> {
    (0..spec.periods())
        .into_par_iter()
        .map(|t| match criterion.metric {
            Metric::Epns => epns_eval(spec, plan, t, states),
            Metric::Cvar => cvar_eval(spec, plan, t, states, criterion.alpha),
            m => Err(Error::NonConvexMetric(m.name())),
        })
        .collect()
}

/// Runs the decomposition to the requested gap. `base` plans (hierarchical
/// second step) keep their builds fixed.
pub fn run_benders(
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &BendersOptions,
    base: Option<&InvestmentPlan>,
) -> Result<BendersOutcome> {
    criterion.validate()?;
    if !criterion.metric.is_convex() {
        return Err(Error::NonConvexMetric(criterion.metric.name()));
    }
    if let Some(b) = base {
        spec.check_plan(b)?;
    }
    let limits: Vec<f64> = (0..spec.periods()).map(|t| criterion.limit(spec, t)).collect();
    let mut cuts: Vec<BendersCut> = Vec::new();
    let mut log = BendersLog::default();
    let mut lower_bound = f64::NEG_INFINITY;
    let mut upper_bound: Option<f64> = None;
    let mut incumbent: Option<InvestmentPlan> = None;

    for iteration in 1..=opts.max_iter {
        let started = Instant::now();
        let master = solve_master(spec, &cuts, base)?;
        lower_bound = lower_bound.max(master.lower_bound);
        let plan = master.plan;

        let ops = solve_all_periods(spec, &plan)?;
        let oper_cost = crate::numeric::compensated_sum(ops.iter().map(|o| o.cost));
        let evals = evaluate_metric(spec, &plan, criterion, states)?;
        let violated: Vec<usize> = (0..spec.periods())
            .filter(|&t| evals[t].value > limits[t] + opts.tol_feas)
            .collect();
        let feasible = violated.is_empty();
        if feasible {
            let total = master.invest_cost + oper_cost;
            if upper_bound.map_or(true, |ub| total < ub) {
                upper_bound = Some(total);
                incumbent = Some(plan.clone());
            }
        }

        let needs_opt_cut = oper_cost > master.theta + opts.tol_opt * oper_cost.abs().max(1.0);
        if needs_opt_cut {
            let mut cut = operation_cut(spec, &plan, &ops)?;
            cut.iteration = iteration;
            cuts.push(cut);
        }
        for &t in &violated {
            let mut cut = BendersCut::feasibility(spec, &plan, &evals[t], limits[t]);
            cut.iteration = iteration;
            cuts.push(cut);
        }

        log.iterations.push(IterationRecord {
            iteration,
            plan,
            lower_bound,
            upper_bound,
            invest_cost: master.invest_cost,
            oper_cost,
            theta: master.theta,
            metric_values: evals.iter().map(|e| e.value).collect(),
            feasible,
            optimality_cut: needs_opt_cut,
            feasibility_cuts: violated.len(),
            wall_time: started.elapsed(),
        });

        let converged = upper_bound
            .is_some_and(|ub| (ub - lower_bound) <= opts.tol_gap * ub.abs().max(1.0));
        if converged || (!needs_opt_cut && feasible) {
            let plan = incumbent.expect("a feasible incumbent exists once converged");
            let report = evaluate_plan(spec, &plan, criterion, states)?;
            return Ok(BendersOutcome {
                plan,
                report,
                log,
                cuts,
            });
        }
    }

    let incumbent = match incumbent {
        Some(plan) => Some(Box::new((plan.clone(), evaluate_plan(spec, &plan, criterion, states)?))),
        None => None,
    };
    Err(Error::IterationLimit {
        limit: opts.max_iter,
        incumbent,
        log: Box::new(log),
    })
}
