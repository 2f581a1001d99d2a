//! Extensive-form MIPs over an explicit state set. These serve as the
//! reference optimum for the decomposition and are the only way to plan
//! under LOLP or VaR limits.
//!
//! Every program shares the same skeleton: binary builds `x[k][t]` with the
//! monotonicity rows of the master, per-period derated dispatch columns, and
//! per-state shedding `r[s][t] >= D_t - sum_j xi_js cap_j x_jt`, bounded by
//! `D_t` so the indicator rows of LOLP and VaR need no extra big-M. States
//! whose shedding is zero under every plan are left out.

use crate::error::{Error, Result};
use crate::lp::{self, LinearProgram, LpSolution, LpStatus, Relation};
use crate::model::{InvestmentPlan, Metric, ReliabilityCriterion, SystemSpec};
use crate::reliability::{cvar_lp, StateMode, StateSet};
use serde::{Deserialize, Serialize};

/// Largest `states * periods` accepted by the builders.
pub const MAX_STATE_PERIODS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct MonolithicMip {
    pub program: LinearProgram,
    pub metric: Metric,
    /// Build columns `[candidate][period]`.
    pub x: Vec<Vec<usize>>,
    /// CVaR level the program was built with, if any.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonolithicSolution {
    pub plan: InvestmentPlan,
    pub total_cost: f64,
    pub nodes: usize,
    /// CVaR threshold per period at the optimal plan, for CVaR programs.
    /// The program leaves `b` free within its feasible range, so this is
    /// the minimiser of the CVaR program at the fixed plan.
    pub thresholds: Vec<Option<f64>>,
}

struct StateRows {
    /// `(state index, shedding column)` for states that can shed.
    shed: Vec<(usize, usize)>,
}

fn check_inputs(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
    metric: Metric,
) -> Result<()> {
    criterion.validate()?;
    if criterion.metric != metric {
        return Err(Error::Instance(format!(
            "{} program built for a {} criterion",
            metric.name(),
            criterion.metric.name()
        )));
    }
    if states.mode() != StateMode::Exact {
        return Err(Error::Instance("monolithic programs need an exact state set".into()));
    }
    if states.generators() != spec.generators().len() {
        return Err(Error::Instance("state set does not match the generator list".into()));
    }
    let size = states.len().saturating_mul(spec.periods());
    if size > MAX_STATE_PERIODS {
        return Err(Error::TooLarge(format!(
            "{} states x {} periods exceeds {MAX_STATE_PERIODS}",
            states.len(),
            spec.periods()
        )));
    }
    Ok(())
}

/// Builds, dispatch and shedding columns common to all four programs.
fn skeleton(spec: &SystemSpec, states: &StateSet) -> (LinearProgram, Vec<Vec<usize>>, Vec<StateRows>) {
    let periods = spec.periods();
    let gens = spec.generators();
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

    let mut blocks = Vec::with_capacity(periods);
    for t in 0..periods {
        let demand = spec.demand(t);
        let mut balance = Vec::with_capacity(gens.len() + 1);
        for (j, gen) in gens.iter().enumerate() {
            let g = p.add_var(gen.var_cost, 0.0, f64::INFINITY);
            p.set_var_name(g, format!("g_{}_{}", gen.id, t + 1));
            balance.push((g, 1.0));
            match spec.candidate_slot(j) {
                Some(k) => {
                    let r = p.add_row(
                        vec![(g, 1.0), (x[k][t], -gen.derated_capacity())],
                        Relation::Le,
                        0.0,
                    );
                    p.set_row_name(r, format!("cap_{}_{}", gen.id, t + 1));
                }
                None => p.set_bounds(g, 0.0, gen.derated_capacity()),
            }
        }
        let r = p.add_var(spec.shed_cost(), 0.0, f64::INFINITY);
        p.set_var_name(r, format!("shed_{}", t + 1));
        balance.push((r, 1.0));
        let row = p.add_row(balance, Relation::Eq, demand);
        p.set_row_name(row, format!("balance_{}", t + 1));

        let mut shed = Vec::new();
        for s in 0..states.len() {
            let up = states.up(s);
            let mut rhs = demand;
            let mut coeffs = Vec::new();
            for (j, gen) in gens.iter().enumerate() {
                if !up[j] {
                    continue;
                }
                match spec.candidate_slot(j) {
                    Some(k) if t >= spec.first_buildable(k) => coeffs.push((x[k][t], gen.capacity_mw)),
                    Some(_) => {}
                    None => rhs -= gen.capacity_mw,
                }
            }
            if rhs <= 0.0 {
                continue;
            }
            let rs = p.add_var(0.0, 0.0, demand);
            p.set_var_name(rs, format!("r_{}_{}", s + 1, t + 1));
            coeffs.push((rs, 1.0));
            let row = p.add_row(coeffs, Relation::Ge, rhs);
            p.set_row_name(row, format!("shed_{}_{}", s + 1, t + 1));
            shed.push((s, rs));
        }
        blocks.push(StateRows { shed });
    }
    (p, x, blocks)
}

/// `sum_s p_s r_st <= limit_t` per period.
pub fn build_epns_mip(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
) -> Result<MonolithicMip> {
    check_inputs(spec, states, criterion, Metric::Epns)?;
    let (mut p, x, blocks) = skeleton(spec, states);
    for (t, block) in blocks.iter().enumerate() {
        let coeffs = block
            .shed
            .iter()
            .map(|&(s, r)| (r, states.weights()[s]))
            .collect();
        let row = p.add_row(coeffs, Relation::Le, criterion.limit(spec, t));
        p.set_row_name(row, format!("epns_{}", t + 1));
    }
    Ok(MonolithicMip {
        program: p,
        metric: Metric::Epns,
        x,
        alpha: None,
    })
}

/// Indicator `phi_st >= r_st / D_t` and `sum_s p_s phi_st <= limit`.
pub fn build_lolp_mip(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
) -> Result<MonolithicMip> {
    check_inputs(spec, states, criterion, Metric::Lolp)?;
    let (mut p, x, blocks) = skeleton(spec, states);
    for (t, block) in blocks.iter().enumerate() {
        let demand = spec.demand(t);
        let mut mass = Vec::with_capacity(block.shed.len());
        for &(s, r) in &block.shed {
            let phi = p.add_binary(0.0);
            p.set_var_name(phi, format!("phi_{}_{}", s + 1, t + 1));
            let row = p.add_row(vec![(phi, demand), (r, -1.0)], Relation::Ge, 0.0);
            p.set_row_name(row, format!("ind_{}_{}", s + 1, t + 1));
            mass.push((phi, states.weights()[s]));
        }
        let row = p.add_row(mass, Relation::Le, criterion.limit(spec, t));
        p.set_row_name(row, format!("lolp_{}", t + 1));
    }
    Ok(MonolithicMip {
        program: p,
        metric: Metric::Lolp,
        x,
        alpha: None,
    })
}

/// `r_st - D_t phi_st <= limit_t` and `sum_s p_s phi_st <= alpha`.
pub fn build_var_mip(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
) -> Result<MonolithicMip> {
    check_inputs(spec, states, criterion, Metric::Var)?;
    let (mut p, x, blocks) = skeleton(spec, states);
    for (t, block) in blocks.iter().enumerate() {
        let demand = spec.demand(t);
        let limit = criterion.limit(spec, t);
        let mut mass = Vec::with_capacity(block.shed.len());
        for &(s, r) in &block.shed {
            let phi = p.add_binary(0.0);
            p.set_var_name(phi, format!("phi_{}_{}", s + 1, t + 1));
            let row = p.add_row(vec![(r, 1.0), (phi, -demand)], Relation::Le, limit);
            p.set_row_name(row, format!("var_{}_{}", s + 1, t + 1));
            mass.push((phi, states.weights()[s]));
        }
        let row = p.add_row(mass, Relation::Le, criterion.alpha);
        p.set_row_name(row, format!("tail_{}", t + 1));
    }
    Ok(MonolithicMip {
        program: p,
        metric: Metric::Var,
        x,
        alpha: None,
    })
}

/// `b_t + (1/alpha) sum_s p_s y_st <= limit_t` with `y_st >= r_st - b_t`.
pub fn build_cvar_mip(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
) -> Result<MonolithicMip> {
    check_inputs(spec, states, criterion, Metric::Cvar)?;
    let (mut p, x, blocks) = skeleton(spec, states);
    for (t, block) in blocks.iter().enumerate() {
        let b = p.add_var(0.0, 0.0, f64::INFINITY);
        p.set_var_name(b, format!("b_{}", t + 1));
        let mut tail = vec![(b, 1.0)];
        for &(s, r) in &block.shed {
            let y = p.add_var(0.0, 0.0, f64::INFINITY);
            p.set_var_name(y, format!("y_{}_{}", s + 1, t + 1));
            let row = p.add_row(vec![(y, 1.0), (r, -1.0), (b, 1.0)], Relation::Ge, 0.0);
            p.set_row_name(row, format!("excess_{}_{}", s + 1, t + 1));
            tail.push((y, states.weights()[s] / criterion.alpha));
        }
        let row = p.add_row(tail, Relation::Le, criterion.limit(spec, t));
        p.set_row_name(row, format!("cvar_{}", t + 1));
    }
    Ok(MonolithicMip {
        program: p,
        metric: Metric::Cvar,
        x,
        alpha: Some(criterion.alpha),
    })
}

/// Builder for the criterion's own metric.
pub fn build_mip(spec: &SystemSpec, states: &StateSet, criterion: &ReliabilityCriterion) -> Result<MonolithicMip> {
    match criterion.metric {
        Metric::Epns => build_epns_mip(spec, states, criterion),
        Metric::Cvar => build_cvar_mip(spec, states, criterion),
        Metric::Lolp => build_lolp_mip(spec, states, criterion),
        Metric::Var => build_var_mip(spec, states, criterion),
    }
}

impl MonolithicMip {
    /// Reads the plan and thresholds out of an optimal solution.
    pub fn extract(&self, spec: &SystemSpec, states: &StateSet, sol: &LpSolution) -> Result<MonolithicSolution> {
        if sol.status != LpStatus::Optimal {
            return Err(Error::Unsatisfiable(format!(
                "{}-constrained program is {:?}",
                self.metric.name(),
                sol.status
            )));
        }
        let built = self
            .x
            .iter()
            .map(|row| row.iter().map(|&v| sol.primal[v] > 0.5).collect())
            .collect();
        let plan = InvestmentPlan::new(spec, built)?;
        let thresholds = (0..spec.periods())
            .map(|t| match self.alpha {
                Some(alpha) => cvar_lp(spec, &plan, t, states, alpha).map(|r| Some(r.threshold)),
                None => Ok(None),
            })
            .collect::<Result<_>>()?;
        Ok(MonolithicSolution {
            plan,
            total_cost: sol.objective,
            nodes: sol.nodes,
            thresholds,
        })
    }
}

/// Builds and solves the program for the criterion's metric.
pub fn solve_monolithic(
    spec: &SystemSpec,
    states: &StateSet,
    criterion: &ReliabilityCriterion,
) -> Result<MonolithicSolution> {
    let mip = build_mip(spec, states, criterion)?;
    let sol = lp::solve_mip(&mip.program)?;
    mip.extract(spec, states, &sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Generator;
    use crate::reliability::{enumerate_states, sample_states};

    fn instance_a_with_candidate() -> SystemSpec {
        SystemSpec::new(
            vec![
                Generator::existing("g1", 80.0, 0.1, 10.0),
                Generator::existing("g2", 50.0, 0.2, 20.0),
                Generator::candidate("c", 30.0, 0.0, 15.0, 500.0),
            ],
            vec![100.0],
            1000.0,
        )
        .unwrap()
    }

    #[test]
    fn lolp_limit_forces_the_candidate() {
        let spec = instance_a_with_candidate();
        let states = enumerate_states(&spec).unwrap();
        // LOLP is .28 without the candidate and .10 with it.
        let c = ReliabilityCriterion::new(Metric::Lolp, 0.12, 0.05).unwrap();
        let sol = solve_monolithic(&spec, &states, &c).unwrap();
        assert!(sol.plan.is_built(0, 0));
        let strict = ReliabilityCriterion::new(Metric::Lolp, 0.05, 0.05).unwrap();
        assert!(matches!(solve_monolithic(&spec, &states, &strict), Err(Error::Unsatisfiable(_))));
    }

    #[test]
    fn vacuous_lolp_matches_unconstrained_epns() {
        let spec = instance_a_with_candidate();
        let states = enumerate_states(&spec).unwrap();
        let lolp = ReliabilityCriterion::new(Metric::Lolp, 1.0, 0.05).unwrap();
        let a = solve_monolithic(&spec, &states, &lolp).unwrap();
        let b = solve_monolithic(&spec, &states, &ReliabilityCriterion::vacuous()).unwrap();
        assert!((a.total_cost - b.total_cost).abs() < 1e-7);
    }

    #[test]
    fn zero_limits_are_infeasible() {
        let spec = instance_a_with_candidate();
        let states = enumerate_states(&spec).unwrap();
        for c in [
            ReliabilityCriterion::new(Metric::Lolp, 0.0, 0.05).unwrap(),
            ReliabilityCriterion::epns(0.0),
            ReliabilityCriterion::new(Metric::Var, 0.0, 0.01).unwrap(),
        ] {
            let err = solve_monolithic(&spec, &states, &c).unwrap_err();
            assert!(matches!(err, Error::Unsatisfiable(_)), "{c:?}");
        }
    }

    #[test]
    fn sampled_states_are_rejected() {
        let spec = instance_a_with_candidate();
        let states = sample_states(&spec, 10, 1).unwrap();
        assert!(build_epns_mip(&spec, &states, &ReliabilityCriterion::epns(0.01)).is_err());
    }

    #[test]
    fn metric_mismatch_is_rejected() {
        let spec = instance_a_with_candidate();
        let states = enumerate_states(&spec).unwrap();
        assert!(build_cvar_mip(&spec, &states, &ReliabilityCriterion::epns(0.01)).is_err());
    }

    #[test]
    fn oversized_grids_are_rejected() {
        let gens: Vec<Generator> = (0..13)
            .map(|i| Generator::existing(format!("g{i}"), 10.0, 0.1, 1.0))
            .collect();
        let spec = SystemSpec::new(gens, vec![50.0], 100.0).unwrap();
        let states = enumerate_states(&spec).unwrap();
        let err = build_epns_mip(&spec, &states, &ReliabilityCriterion::epns(0.01)).unwrap_err();
        assert!(matches!(err, Error::TooLarge(_)));
    }

    #[test]
    fn cvar_threshold_is_the_quantile() {
        let spec = instance_a_with_candidate();
        let states = enumerate_states(&spec).unwrap();
        // Unbuilt CVaR is 70. Built, shedding is 20 w.p. .08 and 70 w.p. .02, CVaR 40.
        let c = ReliabilityCriterion::cvar(0.5, 0.05);
        let sol = solve_monolithic(&spec, &states, &c).unwrap();
        assert!(sol.plan.is_built(0, 0));
        assert!((sol.thresholds[0].unwrap() - 20.0).abs() < 1e-7);
    }
}
