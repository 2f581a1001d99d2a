//! Seeded synthetic cases.

use crate::case::{CaseFile, SolverSettings, SCHEMA_VERSION};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan_core::reliability::enumerate_states;
use relplan_core::{evaluate_plan, Generator, InvestmentPlan, ReliabilityCriterion, SystemSpec};
use thiserror::Error;

/// Generators enumerated when checking satisfiability.
pub const MAX_GENERATED_UNITS: usize = 20;

/// EPNS fraction every generated case meets with all candidates built.
pub const GUARANTEED_EPNS_FRAC: f64 = 0.01;

const SHED_COST: f64 = 1000.0;
const MAX_REPAIR_ROUNDS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub n_existing: usize,
    pub n_candidates: usize,
    pub periods: usize,
    /// Demand multiplier from one period to the next.
    pub demand_growth: f64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Core(#[from] relplan_core::Error),
    #[error("could not make the case satisfiable after {0} rounds")]
    Unrepaired(usize),
}

fn round_to(v: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (v * s).round() / s
}

fn check(p: &GenParams) -> Result<(), GenError> {
    let bad = |m: &str| Err(GenError::Parameter(m.into()));
    if p.n_existing == 0 {
        return bad("at least one existing unit is required");
    }
    if p.n_candidates == 0 {
        return bad("at least one candidate is required");
    }
    if p.n_existing + p.n_candidates > MAX_GENERATED_UNITS {
        return bad(&format!("at most {MAX_GENERATED_UNITS} units in total"));
    }
    if p.periods == 0 || p.periods > 120 {
        return bad("periods must lie in 1..=120");
    }
    if !(0.5..=2.0).contains(&p.demand_growth) {
        return bad("demand growth must lie in [0.5, 2]");
    }
    Ok(())
}

/// Existing fleet sized near first-period demand; candidates with outage
/// rates, costs and start periods drawn from the seed. Candidate capacity is
/// grown until the all-built plan meets an EPNS limit of 1% of demand in
/// every period; if that is slow, start periods are moved to 1 and outage
/// rates halved as well.
pub fn gen_case(p: &GenParams) -> Result<CaseFile, GenError> {
    check(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut gens = Vec::new();
    let mut derated = 0.0;
    for i in 0..p.n_existing {
        let cap = rng.random_range(20.0..150.0f64).round();
        let prob = round_to(rng.random_range(0.02..0.12), 3);
        derated += cap * (1.0 - prob);
        let var = rng.random_range(10.0..60.0f64).round();
        gens.push(Generator::existing(format!("e{}", i + 1), cap, prob, var));
    }
    let d0 = (0.85 * derated).round();
    let demand: Vec<f64> = (0..p.periods)
        .map(|t| round_to(d0 * p.demand_growth.powi(t as i32), 1))
        .collect();
    for i in 0..p.n_candidates {
        let cap = rng.random_range(20.0..100.0f64).round();
        let prob = round_to(rng.random_range(0.02..0.1), 3);
        let var = rng.random_range(5.0..50.0f64).round();
        let invest = (cap * rng.random_range(200.0..1500.0)).round();
        let earliest = if p.periods > 1 && rng.random_bool(0.25) {
            rng.random_range(1..=p.periods.min(3))
        } else {
            1
        };
        gens.push(Generator::candidate(format!("c{}", i + 1), cap, prob, var, invest).with_earliest_period(earliest));
    }

    let criterion = ReliabilityCriterion::epns(GUARANTEED_EPNS_FRAC);
    let mut spec = SystemSpec::new(gens, demand.clone(), SHED_COST)?;
    let mut rounds = 0;
    while !satisfiable(&spec, &criterion)? {
        rounds += 1;
        if rounds > MAX_REPAIR_ROUNDS {
            return Err(GenError::Unrepaired(MAX_REPAIR_ROUNDS));
        }
        let gens = spec
            .generators()
            .iter()
            .map(|g| {
                let mut g = g.clone();
                if g.is_candidate() {
                    g.capacity_mw = (g.capacity_mw * 1.25).round();
                    if rounds > 5 {
                        g.earliest_period = 1;
                    }
                    if rounds > 10 {
                        g.outage_prob = round_to(g.outage_prob / 2.0, 6);
                    }
                }
                g
            })
            .collect();
        spec = SystemSpec::new(gens, demand.clone(), SHED_COST)?;
    }

    Ok(CaseFile {
        schema_version: SCHEMA_VERSION,
        name: Some(format!(
            "synthetic-{}x{}x{}-seed{}",
            p.n_existing, p.n_candidates, p.periods, p.seed
        )),
        generators: spec.generators().to_vec(),
        periods: p.periods,
        demand_mw: demand,
        shed_cost: SHED_COST,
        criterion,
        options: SolverSettings {
            seed: p.seed,
            ..SolverSettings::default()
        },
    })
}

fn satisfiable(spec: &SystemSpec, c: &ReliabilityCriterion) -> Result<bool, GenError> {
    let states = enumerate_states(spec)?;
    let report = evaluate_plan(spec, &InvestmentPlan::full(spec), c, &states)?;
    Ok(report.violated_periods == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_case;

    fn params(seed: u64) -> GenParams {
        GenParams {
            n_existing: 4,
            n_candidates: 3,
            periods: 3,
            demand_growth: 1.08,
            seed,
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = gen_case(&params(5)).unwrap().to_json();
        let b = gen_case(&params(5)).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, gen_case(&params(6)).unwrap().to_json());
    }

    #[test]
    fn generated_cases_parse_and_are_satisfiable() {
        for seed in 0..20 {
            let case = gen_case(&params(seed)).unwrap();
            let parsed = parse_case(case.to_json().as_bytes()).unwrap();
            assert_eq!(parsed, case);
            let spec = parsed.spec().unwrap();
            assert!(satisfiable(&spec, &ReliabilityCriterion::epns(0.01)).unwrap());
            let d = parsed.demand_mw;
            assert!(d.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn instance_a_shape() {
        let case = gen_case(&GenParams {
            n_existing: 2,
            n_candidates: 1,
            periods: 1,
            demand_growth: 1.0,
            seed: 1,
        })
        .unwrap();
        let spec = case.spec().unwrap();
        assert_eq!((spec.generators().len(), spec.candidates().len(), spec.periods()), (3, 1, 1));
    }

    #[test]
    fn single_weak_candidate_is_repaired() {
        for seed in 0..10 {
            let case = gen_case(&GenParams {
                n_existing: 1,
                n_candidates: 1,
                periods: 2,
                demand_growth: 1.3,
                seed,
            })
            .unwrap();
            assert!(satisfiable(&case.spec().unwrap(), &case.criterion).unwrap());
        }
    }

    #[test]
    fn bounds_are_checked() {
        let mut p = params(0);
        p.n_existing = 0;
        assert!(matches!(gen_case(&p), Err(GenError::Parameter(_))));
        let mut p = params(0);
        p.n_candidates = 30;
        assert!(matches!(gen_case(&p), Err(GenError::Parameter(_))));
        p.n_candidates = 0;
        assert!(matches!(gen_case(&p), Err(GenError::Parameter(_))));
        let mut p = params(0);
        p.demand_growth = f64::NAN;
        assert!(matches!(gen_case(&p), Err(GenError::Parameter(_))));
    }
}
