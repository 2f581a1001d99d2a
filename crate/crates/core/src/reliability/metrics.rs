use super::{OutageState, StateSet};
use crate::error::{Error, Result};
use crate::model::{BuildLevels, SystemSpec};
use crate::numeric::{compensated_sum, CompensatedSum};
use rayon::prelude::*;

/// Shedding below this many MW counts as no shedding.
pub const SHED_ZERO_TOL: f64 = 1e-9;

/// Relative slack when comparing tail masses against alpha.
const MASS_TOL: f64 = 1e-12;

/// Operational capacity of each generator in `period` (0 for unbuilt candidates).
pub(crate) fn unit_capacities<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
) -> Result<Vec<f64>> {
    spec.check_plan(plan)?;
    if period >= spec.periods() {
        return Err(Error::Instance(format!("period {period} out of range")));
    }
    Ok(spec
        .generators()
        .iter()
        .enumerate()
        .map(|(j, g)| g.capacity_mw * spec.level(plan, j, period))
        .collect())
}

fn shed_row(demand: f64, caps: &[f64], up: &[bool]) -> f64 {
    let mut cap = 0.0;
    for (c, &u) in caps.iter().zip(up) {
        if u {
            cap += c;
        }
    }
    (demand - cap).max(0.0)
}

/// Load shedding in one state: `max(D - available capacity, 0)`.
pub fn shedding<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    state: &OutageState<'_>,
) -> Result<f64> {
    let available = crate::model::available_capacity(spec, plan, period, state)?;
    Ok((spec.demand(period) - available).max(0.0))
}

/// The discrete shedding distribution of one period under a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ShedDistribution {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ShedDistribution {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::Instance("values and weights differ in length".into()));
        }
        Ok(ShedDistribution { values, weights })
    }

    /// Evaluates shedding of every state, in parallel, preserving state order.
    pub fn evaluate<P: BuildLevels + Sync + ?Sized>(
        spec: &SystemSpec,
        plan: &P,
        period: usize,
        states: &StateSet,
    ) -> Result<Self> {
        if states.generators() != spec.generators().len() {
            return Err(Error::Instance("state set does not match the generator list".into()));
        }
        let caps = unit_capacities(spec, plan, period)?;
        let demand = spec.demand(period);
        let n = states.generators();
        let values = if n == 0 {
            vec![demand; states.len()]
        } else {
            states
                .rows()
                .par_chunks(n)
                .with_min_len(512)
                .map(|up| shed_row(demand, &caps, up))
                .collect()
        };
        Ok(ShedDistribution {
            values,
            weights: states.weights().to_vec(),
        })
    }

    pub fn lolp(&self) -> f64 {
        compensated_sum(
            self.values
                .iter()
                .zip(&self.weights)
                .filter(|(r, _)| **r > SHED_ZERO_TOL)
                .map(|(_, w)| *w),
        )
    }

    pub fn epns(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.weights).map(|(r, w)| r * w))
    }

    /// State indices sorted by decreasing shedding (ties by index).
    fn descending(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        order
    }

    /// `inf { v : P(R > v) <= alpha }` over the support of the distribution.
    pub fn var(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if self.values.is_empty() {
            return Err(Error::Instance("VaR of an empty state set".into()));
        }
        let order = self.descending();
        let limit = alpha * (1.0 + MASS_TOL);
        let mut above = CompensatedSum::new();
        let mut answer = self.values[order[0]];
        let mut k = 0;
        while k < order.len() {
            let v = self.values[order[k]];
            if above.value() > limit {
                break;
            }
            answer = v;
            while k < order.len() && self.values[order[k]] == v {
                above.add(self.weights[order[k]]);
                k += 1;
            }
        }
        Ok(answer)
    }

    /// Mean of the worst `alpha` probability mass, splitting the atom at the quantile.
    pub fn cvar(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        if self.values.is_empty() {
            return Err(Error::Instance("CVaR of an empty state set".into()));
        }
        let mut taken = CompensatedSum::new();
        let mut tail = CompensatedSum::new();
        for s in self.descending() {
            let room = alpha - taken.value();
            if room <= 0.0 {
                break;
            }
            let w = self.weights[s].min(room);
            taken.add(w);
            tail.add(w * self.values[s]);
        }
        Ok(tail.value() / alpha)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Instance(format!("alpha {alpha} outside (0, 1]")))
    }
}

/// Probability that shedding is positive.
pub fn lolp<P: BuildLevels + Sync + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
) -> Result<f64> {
    Ok(ShedDistribution::evaluate(spec, plan, period, states)?.lolp())
}

/// Expected power not supplied, MW.
pub fn epns<P: BuildLevels + Sync + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    states: &StateSet,
) -> Result<f64> {
    Ok(ShedDistribution::evaluate(spec, plan, period, states)?.epns())
}

pub fn var_alpha(dist: &ShedDistribution, alpha: f64) -> Result<f64> {
    dist.var(alpha)
}

pub fn cvar_alpha(dist: &ShedDistribution, alpha: f64) -> Result<f64> {
    dist.cvar(alpha)
}
