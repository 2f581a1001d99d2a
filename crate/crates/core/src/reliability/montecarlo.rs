use super::metrics::{unit_capacities, SHED_ZERO_TOL};
use super::{RiskEvaluation, StateSampler};
use crate::error::{Error, Result};
use crate::model::{BuildLevels, Metric, SystemSpec};
use crate::numeric::CompensatedSum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McOptions {
    /// Stop once standard error / mean falls to this value.
    pub cov_target: f64,
    pub batch: usize,
    /// Samples required before a zero estimate is accepted.
    pub min_samples: usize,
    pub max_samples: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            cov_target: 0.05,
            batch: 1000,
            min_samples: 10_000,
            max_samples: 10_000_000,
        }
    }
}

/// Monte Carlo EPNS estimate grown in batches until its coefficient of
/// variation reaches `opts.cov_target`.
pub fn mc_epns_converged<P: BuildLevels + ?Sized>(
    spec: &SystemSpec,
    plan: &P,
    period: usize,
    seed: u64,
    opts: &McOptions,
) -> Result<RiskEvaluation> {
    if !(opts.cov_target > 0.0) || opts.batch == 0 {
        return Err(Error::Instance("cov_target and batch must be positive".into()));
    }
    let caps = unit_capacities(spec, plan, period)?;
    let demand = spec.demand(period);
    let candidates = spec.candidates();
    let mut sampler = StateSampler::new(spec, seed);
    let mut rows = Vec::new();

    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut shed_up = vec![0usize; candidates.len()];
    let mut n = 0usize;
    let width = spec.generators().len();

    loop {
        rows.clear();
        sampler.fill(opts.batch, &mut rows);
        for s in 0..opts.batch {
            let up = &rows[s * width..(s + 1) * width];
            let cap: f64 = caps.iter().zip(up).filter(|(_, &u)| u).map(|(c, _)| c).sum();
            let r = (demand - cap).max(0.0);
            sum.add(r);
            sum_sq.add(r * r);
            if r > SHED_ZERO_TOL {
                for (k, &j) in candidates.iter().enumerate() {
                    shed_up[k] += usize::from(up[j]);
                }
            }
        }
        n += opts.batch;

        let nf = n as f64;
        let mean = sum.value() / nf;
        let variance = if n > 1 {
            ((sum_sq.value() - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (variance / nf).sqrt();
        let estimate = RiskEvaluation {
            metric: Metric::Epns,
            period,
            value: mean,
            subgradient: candidates
                .iter()
                .zip(&shed_up)
                .map(|(&j, &c)| match c {
                    0 => 0.0,
                    c => -(c as f64 / nf) * spec.generators()[j].capacity_mw,
                })
                .collect(),
            standard_error: Some(se),
            samples: n,
        };
        if mean > 0.0 && se / mean <= opts.cov_target {
            return Ok(estimate);
        }
        if mean == 0.0 && n >= opts.min_samples {
            return Ok(estimate);
        }
        if n >= opts.max_samples {
            let cov = if mean > 0.0 { se / mean } else { f64::INFINITY };
            return Err(Error::McNotConverged {
                samples: n,
                cov,
                partial: Box::new(estimate),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Generator, InvestmentPlan};

    fn instance_a() -> SystemSpec {
        SystemSpec::new(
            vec![
                Generator::existing("g1", 80.0, 0.1, 10.0),
                Generator::existing("g2", 50.0, 0.2, 20.0),
            ],
            vec![100.0],
            1000.0,
        )
        .unwrap()
    }

    #[test]
    fn estimate_brackets_exact_value() {
        let spec = instance_a();
        let ev = mc_epns_converged(&spec, &InvestmentPlan::empty(&spec), 0, 1, &McOptions::default())
            .unwrap();
        let se = ev.standard_error.unwrap();
        assert!(se / ev.value <= 0.05);
        assert!((ev.value - 9.6).abs() <= 3.0 * se);
    }

    #[test]
    fn zero_epns_stops_at_the_floor() {
        let spec = SystemSpec::new(
            vec![
                Generator::existing("g", 500.0, 0.01, 1.0),
                Generator::existing("firm", 150.0, 0.0, 2.0),
            ],
            vec![100.0],
            50.0,
        )
        .unwrap();
        let opts = McOptions::default();
        let ev = mc_epns_converged(&spec, &InvestmentPlan::empty(&spec), 0, 9, &opts).unwrap();
        assert_eq!(ev.value, 0.0);
        assert_eq!(ev.samples, opts.min_samples);
    }

    #[test]
    fn loose_target_stops_after_one_batch() {
        let spec = instance_a();
        let opts = McOptions {
            cov_target: 1.0,
            ..McOptions::default()
        };
        let ev = mc_epns_converged(&spec, &InvestmentPlan::empty(&spec), 0, 5, &opts).unwrap();
        assert_eq!(ev.samples, opts.batch);
    }

    #[test]
    fn sample_cap_is_a_resource_error() {
        let spec = instance_a();
        let opts = McOptions {
            cov_target: 1e-4,
            max_samples: 2000,
            ..McOptions::default()
        };
        let err = mc_epns_converged(&spec, &InvestmentPlan::empty(&spec), 0, 5, &opts).unwrap_err();
        assert!(err.is_resource_limit());
    }
}
