//! Report envelopes and plain-text tables.

use crate::case::StateSettings;
use relplan_core::benders::BendersOptions;
use relplan_core::reliability::{McOptions, RiskEvaluation};
use relplan_core::{ComparisonReport, InvestmentPlan, PlanOutcome, PlanReport, ReliabilityCriterion, StateMode, SystemSpec};
use serde::Serialize;
use std::fmt::Write as _;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Options in force for a run, after command-line overrides.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedOptions {
    pub seed: u64,
    /// Worker threads, `None` for the machine default.
    pub threads: Option<usize>,
    pub criterion: ReliabilityCriterion,
    pub benders: BendersOptions,
    pub states: StateSettings,
    pub state_mode: StateMode,
    pub state_count: usize,
    pub monte_carlo: McOptions,
}

#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<&'a str>,
    pub options: &'a ResolvedOptions,
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, case: Option<&'a str>, options: &'a ResolvedOptions, result: T) -> Self {
        Envelope {
            tool: TOOL,
            version: VERSION,
            command,
            case,
            options,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

/// Result of `evaluate`.
#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub plan: InvestmentPlan,
    pub report: PlanReport,
    /// Monte Carlo EPNS per period, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<Vec<RiskEvaluation>>,
}

fn money(v: f64) -> String {
    format!("{v:.2}")
}

fn built_ids(spec: &SystemSpec, plan: &InvestmentPlan) -> String {
    let ids: Vec<String> = (0..spec.candidates().len())
        .filter_map(|k| plan.first_period(k).map(|t| format!("{}@{}", spec.candidate(k).id, t + 1)))
        .collect();
    if ids.is_empty() {
        "-".into()
    } else {
        ids.join(" ")
    }
}

pub fn plan_table(spec: &SystemSpec, plan: &InvestmentPlan, r: &PlanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "builds      {}", built_ids(spec, plan));
    let _ = writeln!(out, "invest      {}", money(r.invest_cost));
    let _ = writeln!(out, "operation   {}", money(r.oper_cost));
    let _ = writeln!(out, "total       {}", money(r.total_cost));
    let _ = writeln!(
        out,
        "criterion   {} <= {} (alpha {})",
        r.criterion.metric.name(),
        r.criterion.limit_frac,
        r.criterion.alpha
    );
    let _ = writeln!(out, "violated    {} of {} periods", r.violated_periods, r.periods.len());
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:>6} {:>10} {:>9} {:>10} {:>8} {:>10} {:>10} {:>10}  ",
        "period", "demand", "added", "EPNS", "LOLP", "VaR", "CVaR", "limit"
    );
    for (t, m) in r.periods.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>6} {:>10.1} {:>9.1} {:>10.4} {:>8.5} {:>10.3} {:>10.3} {:>10.4}  {}",
            t + 1,
            spec.demand(t),
            r.added_mw[t],
            m.epns,
            m.lolp,
            m.var,
            m.cvar,
            m.limit,
            if m.violated { "VIOLATED" } else { "" }
        );
    }
    out
}

pub fn outcome_table(spec: &SystemSpec, o: &PlanOutcome) -> String {
    let mut out = format!("method      {}\n", o.method.label());
    out.push_str(&plan_table(spec, &o.plan, &o.report));
    for (i, log) in o.logs.iter().enumerate() {
        let _ = writeln!(out);
        let _ = writeln!(out, "decomposition run {} ({} iterations)", i + 1, log.len());
        let _ = writeln!(out, "{:>5} {:>16} {:>16} {:>5} {:>5}", "iter", "lower", "upper", "opt", "feas");
        for it in &log.iterations {
            let ub = it.upper_bound.map_or_else(|| "-".to_string(), money);
            let _ = writeln!(
                out,
                "{:>5} {:>16} {:>16} {:>5} {:>5}",
                it.iteration,
                money(it.lower_bound),
                ub,
                if it.optimality_cut { "yes" } else { "" },
                it.feasibility_cuts
            );
        }
    }
    out
}

pub fn comparison_table(spec: &SystemSpec, c: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "EPNS limit  {} of demand", c.criterion.limit_frac);
    if let Some(cv) = &c.cvar_criterion {
        let _ = writeln!(out, "CVaR limit  {:.6} of demand (alpha {})", cv.limit_frac, cv.alpha);
    }
    let _ = writeln!(out);
    let mut header = format!("{:<8}", "method");
    for t in 0..spec.periods() {
        header.push_str(&format!(" {:>8}", format!("MW p{}", t + 1)));
    }
    header.push_str(&format!(" {:>14} {:>14} {:>14} {:>8}", "invest", "operation", "total", "violated"));
    let _ = writeln!(out, "{header}");
    for row in &c.rows {
        let mut line = format!("{:<8}", row.method.label());
        for mw in &row.report.added_mw {
            line.push_str(&format!(" {mw:>8.1}"));
        }
        let r = &row.report;
        line.push_str(&format!(
            " {:>14} {:>14} {:>14} {:>8}",
            money(r.invest_cost),
            money(r.oper_cost),
            money(r.total_cost),
            r.violated_periods
        ));
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn evaluation_table(spec: &SystemSpec, e: &Evaluation) -> String {
    let mut out = plan_table(spec, &e.plan, &e.report);
    if let Some(mc) = &e.monte_carlo {
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>6} {:>12} {:>10} {:>10}", "period", "MC EPNS", "std err", "samples");
        for (t, ev) in mc.iter().enumerate() {
            let se = ev.standard_error.unwrap_or(0.0);
            let _ = writeln!(
                out,
                "{:>6} {:>12.4} {:>10.4} {:>10}",
                t + 1,
                ev.value,
                se,
                ev.samples
            );
        }
    }
    out
}
