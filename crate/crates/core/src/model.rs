//! Planning instance, investment plans and reliability criteria.
//!
//! Periods are addressed by zero-based index `t` in every API. The only
//! one-based quantity is [`Generator::earliest_period`], which is a period
//! *number* as it appears in case files (`1` = first period).

use crate::error::{Error, Result};
use crate::reliability::OutageState;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Existing,
    Candidate,
}

/// A two-state generating unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub kind: GeneratorKind,
    /// Installed capacity in MW.
    pub capacity_mw: f64,
    /// Probability that the unit is unavailable in a period.
    pub outage_prob: f64,
    /// Variable operation cost, $ per MW per period.
    pub var_cost: f64,
    /// One-time investment cost in $. Zero for existing units.
    pub invest_cost: f64,
    /// First period number (1-based) in which a candidate may operate.
    #[serde(default = "first_period")]
    pub earliest_period: usize,
}

fn first_period() -> usize {
    1
}

impl Generator {
    pub fn existing(id: impl Into<String>, capacity_mw: f64, outage_prob: f64, var_cost: f64) -> Self {
        Generator {
            id: id.into(),
            kind: GeneratorKind::Existing,
            capacity_mw,
            outage_prob,
            var_cost,
            invest_cost: 0.0,
            earliest_period: 1,
        }
    }

    pub fn candidate(
        id: impl Into<String>,
        capacity_mw: f64,
        outage_prob: f64,
        var_cost: f64,
        invest_cost: f64,
    ) -> Self {
        Generator {
            id: id.into(),
            kind: GeneratorKind::Candidate,
            capacity_mw,
            outage_prob,
            var_cost,
            invest_cost,
            earliest_period: 1,
        }
    }

    pub fn with_earliest_period(mut self, period: usize) -> Self {
        self.earliest_period = period;
        self
    }

    pub fn is_candidate(&self) -> bool {
        self.kind == GeneratorKind::Candidate
    }

    /// Capacity scaled by average availability, `(1 - p) * capacity`.
    pub fn derated_capacity(&self) -> f64 {
        (1.0 - self.outage_prob) * self.capacity_mw
    }

    fn validate(&self, index: usize) -> Result<()> {
        let at = |what: &str| Error::Instance(format!("generator {index} ({}): {what}", self.id));
        if !(self.capacity_mw.is_finite() && self.capacity_mw > 0.0) {
            return Err(at("capacity_mw must be positive"));
        }
        if !(0.0..=1.0).contains(&self.outage_prob) {
            return Err(at("outage_prob must lie in [0, 1]"));
        }
        if !(self.var_cost.is_finite() && self.var_cost >= 0.0) {
            return Err(at("var_cost must be non-negative"));
        }
        if !(self.invest_cost.is_finite() && self.invest_cost >= 0.0) {
            return Err(at("invest_cost must be non-negative"));
        }
        match self.kind {
            GeneratorKind::Existing if self.invest_cost != 0.0 => {
                Err(at("existing units carry no investment cost"))
            }
            GeneratorKind::Candidate if self.invest_cost == 0.0 => {
                Err(at("candidates must have a positive investment cost"))
            }
            _ if self.earliest_period == 0 => Err(at("earliest_period is 1-based")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSpecData {
    generators: Vec<Generator>,
    periods: usize,
    demand_mw: Vec<f64>,
    shed_cost: f64,
}

/// A validated planning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemSpecData")]
pub struct SystemSpec {
    generators: Vec<Generator>,
    periods: usize,
    demand_mw: Vec<f64>,
    shed_cost: f64,
    #[serde(skip)]
    candidates: Vec<usize>,
    #[serde(skip)]
    candidate_slot: Vec<Option<usize>>,
}

impl TryFrom<SystemSpecData> for SystemSpec {
    type Error = Error;

    fn try_from(d: SystemSpecData) -> Result<Self> {
        SystemSpec::new(d.generators, d.demand_mw, d.shed_cost)
            .and_then(|s| match s.periods == d.periods {
                true => Ok(s),
                false => Err(Error::Instance(format!(
                    "periods = {} but demand_mw has {} entries",
                    d.periods,
                    s.periods
                ))),
            })
    }
}

impl SystemSpec {
    /// Builds an instance; the number of periods is `demand_mw.len()`.
    pub fn new(generators: Vec<Generator>, demand_mw: Vec<f64>, shed_cost: f64) -> Result<Self> {
        if demand_mw.is_empty() {
            return Err(Error::Instance("at least one period is required".into()));
        }
        if let Some(t) = demand_mw.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Instance(format!("demand of period {t} must be non-negative")));
        }
        if !(shed_cost.is_finite() && shed_cost > 0.0) {
            return Err(Error::Instance("shed_cost must be positive".into()));
        }
        let mut ids = BTreeSet::new();
        for (i, g) in generators.iter().enumerate() {
            g.validate(i)?;
            if !ids.insert(g.id.as_str()) {
                return Err(Error::Instance(format!("duplicate generator id {:?}", g.id)));
            }
            if g.var_cost >= shed_cost {
                return Err(Error::Instance(format!(
                    "shed_cost {shed_cost} must exceed var_cost {} of {}",
                    g.var_cost, g.id
                )));
            }
        }
        let mut candidates = Vec::new();
        let candidate_slot = generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                g.is_candidate().then(|| {
                    candidates.push(i);
                    candidates.len() - 1
                })
            })
            .collect();
        Ok(SystemSpec {
            periods: demand_mw.len(),
            generators,
            demand_mw,
            shed_cost,
            candidates,
            candidate_slot,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn demand(&self, period: usize) -> f64 {
        self.demand_mw[period]
    }

    pub fn demands(&self) -> &[f64] {
        &self.demand_mw
    }

    pub fn shed_cost(&self) -> f64 {
        self.shed_cost
    }

    /// Generator indices of the candidates, in plan row order.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn candidate(&self, slot: usize) -> &Generator {
        &self.generators[self.candidates[slot]]
    }

    /// Plan row of generator `gen`, or `None` for existing units.
    pub fn candidate_slot(&self, gen: usize) -> Option<usize> {
        self.candidate_slot[gen]
    }

    /// First zero-based period index in which candidate `slot` may be built.
    pub fn first_buildable(&self, slot: usize) -> usize {
        self.candidate(slot).earliest_period - 1
    }

    /// Build level of generator `gen` in `period`: 1 for existing units,
    /// the plan entry for candidates.
    pub fn level<P: BuildLevels + ?Sized>(&self, plan: &P, gen: usize, period: usize) -> f64 {
        match self.candidate_slot[gen] {
            None => 1.0,
            Some(slot) => plan.level(slot, period),
        }
    }

    pub(crate) fn check_plan<P: BuildLevels + ?Sized>(&self, plan: &P) -> Result<()> {
        let (rows, cols) = plan.shape();
        // A plan without rows carries no period count.
        if rows != self.candidates.len() || (rows > 0 && cols != self.periods) {
            return Err(Error::Instance(format!(
                "plan is {rows}x{cols} but instance has {} candidates and {} periods",
                self.candidates.len(),
                self.periods
            )));
        }
        Ok(())
    }

    /// Same fleet and shedding cost, different demand profile.
    pub fn with_demands(&self, demand_mw: Vec<f64>) -> Result<Self> {
        SystemSpec::new(self.generators.clone(), demand_mw, self.shed_cost)
    }
}

/// Read access to (possibly fractional) build levels `x[candidate][period]`.
pub trait BuildLevels {
    fn level(&self, candidate: usize, period: usize) -> f64;
    fn shape(&self) -> (usize, usize);
}

/// Binary build matrix over (candidate, period). Once built a unit stays built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvestmentPlan {
    built: Vec<Vec<bool>>,
}

impl InvestmentPlan {
    pub fn new(spec: &SystemSpec, built: Vec<Vec<bool>>) -> Result<Self> {
        if built.len() != spec.candidates().len() {
            return Err(Error::Instance(format!(
                "plan has {} rows, instance has {} candidates",
                built.len(),
                spec.candidates().len()
            )));
        }
        for (slot, row) in built.iter().enumerate() {
            let id = &spec.candidate(slot).id;
            if row.len() != spec.periods() {
                return Err(Error::Instance(format!("plan row for {id} has wrong length")));
            }
            if row.windows(2).any(|w| w[0] && !w[1]) {
                return Err(Error::Instance(format!("plan for {id} is not monotone in time")));
            }
            if row[..spec.first_buildable(slot).min(row.len())].iter().any(|&b| b) {
                return Err(Error::Instance(format!("{id} built before its earliest period")));
            }
        }
        Ok(InvestmentPlan { built })
    }

    /// The plan with no candidate built.
    pub fn empty(spec: &SystemSpec) -> Self {
        InvestmentPlan {
            built: vec![vec![false; spec.periods()]; spec.candidates().len()],
        }
    }

    /// Every candidate built from its earliest period on.
    pub fn full(spec: &SystemSpec) -> Self {
        let first: Vec<_> = (0..spec.candidates().len())
            .map(|slot| Some(spec.first_buildable(slot)))
            .collect();
        Self::from_first_periods(spec, &first).expect("earliest periods are always valid")
    }

    /// Plan from the zero-based first operating period of each candidate.
    pub fn from_first_periods(spec: &SystemSpec, first: &[Option<usize>]) -> Result<Self> {
        let built = first
            .iter()
            .map(|f| (0..spec.periods()).map(|t| f.is_some_and(|f| t >= f)).collect())
            .collect();
        Self::new(spec, built)
    }

    pub fn is_built(&self, candidate: usize, period: usize) -> bool {
        self.built[candidate][period]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.built
    }

    /// Zero-based first operating period of `candidate`, if it is ever built.
    pub fn first_period(&self, candidate: usize) -> Option<usize> {
        self.built[candidate].iter().position(|&b| b)
    }

    pub fn is_ever_built(&self, candidate: usize) -> bool {
        self.first_period(candidate).is_some()
    }

    /// True when every build of `other` is also present here.
    pub fn contains(&self, other: &InvestmentPlan) -> bool {
        self.built
            .iter()
            .flatten()
            .zip(other.built.iter().flatten())
            .all(|(&a, &b)| a || !b)
    }

    pub fn to_relaxed(&self) -> RelaxedPlan {
        RelaxedPlan {
            levels: self
                .built
                .iter()
                .map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }
}

impl BuildLevels for InvestmentPlan {
    fn level(&self, candidate: usize, period: usize) -> f64 {
        if self.built[candidate][period] {
            1.0
        } else {
            0.0
        }
    }

    fn shape(&self) -> (usize, usize) {
        (self.built.len(), self.built.first().map_or(0, Vec::len))
    }
}

/// Fractional build levels in `[0, 1]`; used to probe convexity and subgradients.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedPlan {
    pub levels: Vec<Vec<f64>>,
}

impl RelaxedPlan {
    pub fn zeros(spec: &SystemSpec) -> Self {
        RelaxedPlan {
            levels: vec![vec![0.0; spec.periods()]; spec.candidates().len()],
        }
    }
}

impl BuildLevels for RelaxedPlan {
    fn level(&self, candidate: usize, period: usize) -> f64 {
        self.levels[candidate][period]
    }

    fn shape(&self) -> (usize, usize) {
        (self.levels.len(), self.levels.first().map_or(0, Vec::len))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Epns,
    Cvar,
    Lolp,
    Var,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Epns => "EPNS",
            Metric::Cvar => "CVaR",
            Metric::Lolp => "LOLP",
            Metric::Var => "VaR",
        }
    }

    /// Convex in the relaxed plan, hence usable for feasibility cuts.
    pub fn is_convex(self) -> bool {
        matches!(self, Metric::Epns | Metric::Cvar)
    }
}

/// Per-period reliability limit. For MW-valued metrics the limit is
/// `limit_frac * demand`; for LOLP `limit_frac` is the probability itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityCriterion {
    pub metric: Metric,
    pub limit_frac: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

impl ReliabilityCriterion {
    pub fn new(metric: Metric, limit_frac: f64, alpha: f64) -> Result<Self> {
        let c = ReliabilityCriterion {
            metric,
            limit_frac,
            alpha,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn epns(limit_frac: f64) -> Self {
        ReliabilityCriterion {
            metric: Metric::Epns,
            limit_frac,
            alpha: default_alpha(),
        }
    }

    pub fn cvar(limit_frac: f64, alpha: f64) -> Self {
        ReliabilityCriterion {
            metric: Metric::Cvar,
            limit_frac,
            alpha,
        }
    }

    /// EPNS never exceeds demand, so a unit fraction never binds.
    pub fn vacuous() -> Self {
        Self::epns(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.limit_frac) {
            return Err(Error::Instance("limit_frac must lie in [0, 1]".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Instance("alpha must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Limit in the metric's own unit for `period`.
    pub fn limit(&self, spec: &SystemSpec, period: usize) -> f64 {
        match self.metric {
            Metric::Lolp => self.limit_frac,
            _ => self.limit_frac * spec.demand(period),
        }
    }
}

/// Reliability figures of one period under a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMetrics {
    pub epns: f64,
    pub lolp: f64,
    pub var: f64,
    pub cvar: f64,
    /// Criterion limit for this period, in the criterion metric's unit.
    pub limit: f64,
    pub violated: bool,
}

impl PeriodMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Epns => self.epns,
            Metric::Cvar => self.cvar,
            Metric::Lolp => self.lolp,
            Metric::Var => self.var,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub invest_cost: f64,
    pub oper_cost: f64,
    pub total_cost: f64,
    /// Capacity (MW) whose first operating period is `t`, per period.
    pub added_mw: Vec<f64>,
    pub periods: Vec<PeriodMetrics>,
    pub criterion: ReliabilityCriterion,
    pub violated_periods: usize,
}

/// One-time investment charge: `sum c_j` over candidates built in any period.
pub fn plan_invest_cost(spec: &SystemSpec, plan: &InvestmentPlan) -> Result<f64> {
    spec.check_plan(plan)?;
    Ok(crate::numeric::compensated_sum(
        (0..spec.candidates().len())
            .filter(|&slot| plan.is_ever_built(slot))
            .map(|slot| spec.candidate(slot).invest_cost),
    ))
}

/// Installed capacity that is both available in `state` and operational in `period`.
pub fn available_capacity<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    state: &OutageState<'_>,
) -> Result<f64> {
    spec.check_plan(plan)?;
    if state.up.len() != spec.generators().len() {
        return Err(Error::Instance(format!(
            "state has {} entries for {} generators",
            state.up.len(),
            spec.generators().len()
        )));
    }
    if period >= spec.periods() {
        return Err(Error::Instance(format!("period {period} out of range")));
    }
    Ok(crate::numeric::compensated_sum(
        spec.generators()
            .iter()
            .enumerate()
            .filter(|&(j, _)| state.up[j])
            .map(|(j, g)| g.capacity_mw * spec.level(plan, j, period)),
    ))
}
