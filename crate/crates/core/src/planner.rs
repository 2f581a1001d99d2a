//! Planning methodologies built on the decomposition: economic (EP),
//! hierarchical (HP), integrated (IP), and their side-by-side comparison.

use crate::benders::{run_benders, BendersLog, BendersOptions};
use crate::error::{Error, Result};
use crate::model::{
    plan_invest_cost, InvestmentPlan, Metric, PeriodMetrics, PlanReport, ReliabilityCriterion, SystemSpec,
};
use crate::numeric::compensated_sum;
use crate::operation::solve_all_periods;
use crate::reliability::{ShedDistribution, StateSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Slack, relative to `max(1, limit)`, before a report flags a period as violated.
pub const REPORT_TOL: f64 = 1e-6;

/// Costs and all four risk measures of `plan`, judged against `criterion`.
pub fn evaluate_plan(
    spec: &SystemSpec,
    plan: &InvestmentPlan,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
) -> Result<PlanReport> {
    criterion.validate()?;
    let invest_cost = plan_invest_cost(spec, plan)?;
    let oper_cost = compensated_sum(solve_all_periods(spec, plan)?.iter().map(|o| o.cost));
    let mut added_mw = vec![0.0; spec.periods()];
    for k in 0..spec.candidates().len() {
        if let Some(t) = plan.first_period(k) {
            added_mw[t] += spec.candidate(k).capacity_mw;
        }
    }
    let periods: Vec<PeriodMetrics> = (0..spec.periods())
        .into_par_iter()
        .map(|t| {
            let dist = ShedDistribution::evaluate(spec, plan, t, states)?;
            let limit = criterion.limit(spec, t);
            let mut m = PeriodMetrics {
                epns: dist.epns(),
                lolp: dist.lolp(),
                var: dist.var(criterion.alpha)?,
                cvar: dist.cvar(criterion.alpha)?,
                limit,
                violated: false,
            };
            m.violated = m.get(criterion.metric) > limit + REPORT_TOL * limit.max(1.0);
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let violated_periods = periods.iter().filter(|m| m.violated).count();
    Ok(PlanReport {
        invest_cost,
        oper_cost,
        total_cost: invest_cost + oper_cost,
        added_mw,
        periods,
        criterion: *criterion,
        violated_periods,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ep,
    Hp,
    IpEpns,
    IpCvar,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ep => "EP",
            Method::Hp => "HP",
            Method::IpEpns => "IP-EPNS",
            Method::IpCvar => "IP-CVaR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub method: Method,
    pub plan: InvestmentPlan,
    pub report: PlanReport,
    /// One log per decomposition run (two for HP).
    pub logs: Vec<BendersLog>,
}

/// Cheapest plan with no reliability limit; the report still measures it
/// against `criterion`.
pub fn run_ep(
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &BendersOptions,
) -> Result<PlanOutcome> {
    criterion.validate()?;
    let out = run_benders(spec, &ReliabilityCriterion::vacuous(), states, opts, None)?;
    let report = evaluate_plan(spec, &out.plan, criterion, states)?;
    Ok(PlanOutcome {
        method: Method::Ep,
        plan: out.plan,
        report,
        logs: vec![out.log],
    })
}

/// EP first, then the cheapest reinforcement that keeps every EP build.
pub fn run_hp(
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &BendersOptions,
) -> Result<PlanOutcome> {
    if !criterion.metric.is_convex() {
        return Err(Error::NonConvexMetric(criterion.metric.name()));
    }
    let ep = run_ep(spec, criterion, states, opts)?;
    let out = run_benders(spec, criterion, states, opts, Some(&ep.plan))?;
    let mut logs = ep.logs;
    logs.push(out.log);
    Ok(PlanOutcome {
        method: Method::Hp,
        plan: out.plan,
        report: out.report,
        logs,
    })
}

/// Economics and reliability optimised together.
pub fn run_ip(
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &BendersOptions,
) -> Result<PlanOutcome> {
    let out = run_benders(spec, criterion, states, opts, None)?;
    let method = match criterion.metric {
        Metric::Cvar => Method::IpCvar,
        _ => Method::IpEpns,
    };
    Ok(PlanOutcome {
        method,
        plan: out.plan,
        report: out.report,
        logs: vec![out.log],
    })
}

/// CVaR limit, as a fraction of demand, that the plan just meets in its
/// worst period.
pub fn cvar_limit_frac(report: &PlanReport, spec: &SystemSpec) -> f64 {
    report
        .periods
        .iter()
        .enumerate()
        .filter(|(t, _)| spec.demand(*t) > 0.0)
        .map(|(t, m)| m.cvar / spec.demand(t))
        .fold(0.0, f64::max)
        .min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// EPNS criterion shared by EP, HP and IP-EPNS.
    pub criterion: ReliabilityCriterion,
    /// CVaR criterion derived from the IP-EPNS plan.
    pub cvar_criterion: Option<ReliabilityCriterion>,
    /// In order EP, HP, IP-EPNS, IP-CVaR; shorter if a run failed.
    pub rows: Vec<PlanOutcome>,
}

impl ComparisonReport {
    pub fn get(&self, method: Method) -> Option<&PlanOutcome> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Runs all four methodologies. The CVaR run uses level `criterion.alpha`
/// and the largest CVaR-to-demand ratio of the IP-EPNS plan as its limit.
pub fn compare(
    spec: &SystemSpec,
    criterion: &ReliabilityCriterion,
    states: &StateSet,
    opts: &BendersOptions,
) -> Result<ComparisonReport> {
    if criterion.metric != Metric::Epns {
        return Err(Error::Instance("comparison expects an EPNS criterion".into()));
    }
    let mut report = ComparisonReport {
        criterion: *criterion,
        cvar_criterion: None,
        rows: Vec::with_capacity(4),
    };
    let fail = |report: &ComparisonReport, method: Method, source: Error| Error::Comparison {
        method: method.label(),
        completed: Box::new(report.clone()),
        source: Box::new(source),
    };

    match run_ep(spec, criterion, states, opts) {
        Ok(row) => report.rows.push(row),
        Err(e) => return Err(fail(&report, Method::Ep, e)),
    }
    match run_hp(spec, criterion, states, opts) {
        Ok(row) => report.rows.push(row),
        Err(e) => return Err(fail(&report, Method::Hp, e)),
    }
    let ip = match run_ip(spec, criterion, states, opts) {
        Ok(row) => row,
        Err(e) => return Err(fail(&report, Method::IpEpns, e)),
    };
    let cvar = ReliabilityCriterion::cvar(cvar_limit_frac(&ip.report, spec), criterion.alpha);
    report.rows.push(ip);
    report.cvar_criterion = Some(cvar);
    match run_ip(spec, &cvar, states, opts) {
        Ok(row) => report.rows.push(row),
        Err(e) => return Err(fail(&report, Method::IpCvar, e)),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Generator;
    use crate::reliability::enumerate_states;

    fn stressed() -> SystemSpec {
        SystemSpec::new(
            vec![
                Generator::existing("g1", 80.0, 0.1, 10.0),
                Generator::existing("g2", 50.0, 0.2, 20.0),
                Generator::candidate("cheap", 40.0, 0.1, 5.0, 800.0),
                Generator::candidate("firm", 40.0, 0.0, 30.0, 2500.0),
            ],
            vec![100.0, 110.0],
            1000.0,
        )
        .unwrap()
    }

    #[test]
    fn report_counts_violations() {
        let spec = stressed();
        let states = enumerate_states(&spec).unwrap();
        let r = evaluate_plan(&spec, &InvestmentPlan::empty(&spec), &ReliabilityCriterion::epns(0.01), &states)
            .unwrap();
        assert_eq!(r.violated_periods, 2);
        assert!((r.periods[0].epns - 9.6).abs() < 1e-9);
        assert_eq!(r.total_cost, r.invest_cost + r.oper_cost);
    }

    #[test]
    fn added_capacity_is_booked_in_the_first_period() {
        let spec = stressed();
        let states = enumerate_states(&spec).unwrap();
        let plan = InvestmentPlan::from_first_periods(&spec, &[Some(1), Some(0)]).unwrap();
        let r = evaluate_plan(&spec, &plan, &ReliabilityCriterion::epns(0.01), &states).unwrap();
        assert_eq!(r.added_mw, vec![40.0, 40.0]);
        assert!((r.invest_cost - 3300.0).abs() < 1e-9);
    }

    #[test]
    fn methodology_orderings() {
        let spec = stressed();
        let states = enumerate_states(&spec).unwrap();
        let cmp = compare(&spec, &ReliabilityCriterion::epns(0.01), &states, &BendersOptions::default()).unwrap();
        let ep = cmp.get(Method::Ep).unwrap();
        let hp = cmp.get(Method::Hp).unwrap();
        let ip = cmp.get(Method::IpEpns).unwrap();
        let cv = cmp.get(Method::IpCvar).unwrap();
        assert!(hp.plan.contains(&ep.plan));
        assert_eq!(hp.report.violated_periods, 0);
        assert_eq!(ip.report.violated_periods, 0);
        assert_eq!(cv.report.violated_periods, 0);
        let tol = 1e-6 * hp.report.total_cost;
        assert!(ep.report.total_cost <= ip.report.total_cost + tol);
        assert!(ip.report.total_cost <= hp.report.total_cost + tol);
        assert!(cv.report.total_cost <= ip.report.total_cost + tol);
    }

    #[test]
    fn hp_rejects_non_convex_metrics() {
        let spec = stressed();
        let states = enumerate_states(&spec).unwrap();
        let c = ReliabilityCriterion::new(Metric::Var, 0.1, 0.05).unwrap();
        assert!(matches!(
            run_hp(&spec, &c, &states, &BendersOptions::default()),
            Err(Error::NonConvexMetric(_))
        ));
    }
}
