//! Brute-force reference implementations and random instance generators
//! shared by the integration tests. Nothing here calls into the library's
//! reliability or dispatch code, so agreement is a real cross-check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan_core::{BuildLevels, Generator, InvestmentPlan, Metric, ReliabilityCriterion, SystemSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Instance A: D = 100, units 80 MW (p = .1) and 50 MW (p = .2), plus an
/// optional 30 MW perfectly reliable candidate.
pub fn instance_a(with_candidate: bool) -> SystemSpec {
    let mut gens = vec![
        Generator::existing("g1", 80.0, 0.1, 10.0),
        Generator::existing("g2", 50.0, 0.2, 20.0),
    ];
    if with_candidate {
        gens.push(Generator::candidate("c", 30.0, 0.0, 15.0, 1e6));
    }
    SystemSpec::new(gens, vec![100.0], 1000.0).unwrap()
}

/// Every outage state over all generators, zero-weight states dropped.
pub fn all_states(spec: &SystemSpec) -> Vec<(Vec<bool>, f64)> {
    let n = spec.generators().len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let mut w = 1.0;
        let up: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 0).collect();
        for (g, &u) in spec.generators().iter().zip(&up) {
            w *= if u { 1.0 - g.outage_prob } else { g.outage_prob };
        }
        if w > 0.0 {
            out.push((up, w));
        }
    }
    out
}

/// Level of every generator: 1 for existing units, the plan level for candidates.
pub fn levels<P: BuildLevels>(spec: &SystemSpec, plan: &P, t: usize) -> Vec<f64> {
    let mut slot = 0;
    spec.generators()
        .iter()
        .map(|g| {
            if g.is_candidate() {
                slot += 1;
                plan.level(slot - 1, t)
            } else {
                1.0
            }
        })
        .collect()
}

/// `(shedding, weight)` per state in period `t`.
pub fn shed_distribution<P: BuildLevels>(
    spec: &SystemSpec,
    plan: &P,
    t: usize,
    states: &[(Vec<bool>, f64)],
) -> Vec<(f64, f64)> {
    let lv = levels(spec, plan, t);
    states
        .iter()
        .map(|(up, w)| {
            let mut cap = 0.0;
            for (j, g) in spec.generators().iter().enumerate() {
                if up[j] {
                    cap += g.capacity_mw * lv[j];
                }
            }
            ((spec.demand(t) - cap).max(0.0), *w)
        })
        .collect()
}

pub fn oracle_lolp(dist: &[(f64, f64)]) -> f64 {
    dist.iter().filter(|(r, _)| *r > 1e-9).map(|(_, w)| w).sum()
}

pub fn oracle_epns(dist: &[(f64, f64)]) -> f64 {
    dist.iter().map(|(r, w)| r * w).sum()
}

/// Smallest support point `v` with `P(R > v) <= alpha`.
pub fn oracle_var(dist: &[(f64, f64)], alpha: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &(v, _) in dist {
        let above: f64 = dist.iter().filter(|(r, _)| *r > v).map(|(_, w)| w).sum();
        if above <= alpha * (1.0 + 1e-12) && v < best {
            best = v;
        }
    }
    best
}

/// `min_b b + E[(R - b)^+] / alpha`, minimised over the support (the function
/// is piecewise linear with breakpoints there).
pub fn oracle_cvar(dist: &[(f64, f64)], alpha: f64) -> f64 {
    dist.iter()
        .map(|&(b, _)| {
            let excess: f64 = dist.iter().map(|(r, w)| w * (r - b).max(0.0)).sum();
            b + excess / alpha
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn oracle_metric(dist: &[(f64, f64)], metric: Metric, alpha: f64) -> f64 {
    match metric {
        Metric::Epns => oracle_epns(dist),
        Metric::Cvar => oracle_cvar(dist, alpha),
        Metric::Lolp => oracle_lolp(dist),
        Metric::Var => oracle_var(dist, alpha),
    }
}

/// Merit-order dispatch on derated capacities: cheapest units first, the
/// remainder shed at `shed_cost`.
pub fn merit_order_cost<P: BuildLevels>(spec: &SystemSpec, plan: &P, t: usize) -> f64 {
    let lv = levels(spec, plan, t);
    let mut units: Vec<(f64, f64)> = spec
        .generators()
        .iter()
        .zip(&lv)
        .map(|(g, l)| (g.var_cost, g.derated_capacity() * l))
        .collect();
    units.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut left = spec.demand(t);
    let mut cost = 0.0;
    for (d, cap) in units {
        let g = cap.min(left);
        cost += d * g;
        left -= g;
    }
    cost + left * spec.shed_cost()
}

pub fn oracle_invest(spec: &SystemSpec, plan: &InvestmentPlan) -> f64 {
    (0..spec.candidates().len())
        .filter(|&k| plan.is_ever_built(k))
        .map(|k| spec.candidate(k).invest_cost)
        .sum()
}

pub fn oracle_total(spec: &SystemSpec, plan: &InvestmentPlan) -> f64 {
    oracle_invest(spec, plan) + (0..spec.periods()).map(|t| merit_order_cost(spec, plan, t)).sum::<f64>()
}

/// All monotone plans respecting earliest periods.
pub fn all_plans(spec: &SystemSpec) -> Vec<InvestmentPlan> {
    let t = spec.periods();
    let options: Vec<Vec<Option<usize>>> = (0..spec.candidates().len())
        .map(|k| {
            std::iter::once(None)
                .chain((spec.first_buildable(k)..t).map(Some))
                .collect()
        })
        .collect();
    let mut plans = Vec::new();
    let mut choice = vec![0usize; options.len()];
    loop {
        let first: Vec<Option<usize>> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        plans.push(InvestmentPlan::from_first_periods(spec, &first).unwrap());
        let mut k = 0;
        loop {
            if k == options.len() {
                return plans;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

pub fn meets(spec: &SystemSpec, plan: &InvestmentPlan, c: &ReliabilityCriterion, states: &[(Vec<bool>, f64)]) -> bool {
    (0..spec.periods()).all(|t| {
        let dist = shed_distribution(spec, plan, t, states);
        oracle_metric(&dist, c.metric, c.alpha) <= c.limit(spec, t) + 1e-9
    })
}

/// Exhaustive optimum over plans: `(total cost, plan)`, or `None` if no plan qualifies.
pub fn oracle_optimum(spec: &SystemSpec, c: &ReliabilityCriterion) -> Option<(f64, InvestmentPlan)> {
    let states = all_states(spec);
    all_plans(spec)
        .into_iter()
        .filter(|p| meets(spec, p, c, &states))
        .map(|p| (oracle_total(spec, &p), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub existing: (usize, usize),
    pub candidates: (usize, usize),
    pub periods: (usize, usize),
    /// Cap on generators with 0 < p < 1.
    pub max_stochastic: usize,
}

/// Random fleet whose existing derated capacity roughly meets first-period
/// demand, with demand growth and candidates cheap enough to be worth building.
pub fn random_spec(rng: &mut ChaCha8Rng, shape: Shape) -> SystemSpec {
    let n_exist = rng.random_range(shape.existing.0..=shape.existing.1);
    let n_cand = rng.random_range(shape.candidates.0..=shape.candidates.1);
    let periods = rng.random_range(shape.periods.0..=shape.periods.1);
    let mut stochastic = 0;
    let mut outage = |rng: &mut ChaCha8Rng| {
        if stochastic < shape.max_stochastic && rng.random_bool(0.9) {
            stochastic += 1;
            rng.random_range(0.02..0.2)
        } else {
            0.0
        }
    };
    let mut gens = Vec::new();
    let mut derated = 0.0;
    for i in 0..n_exist {
        let cap = rng.random_range(20.0..100.0f64).round();
        let p = outage(rng);
        derated += cap * (1.0 - p);
        gens.push(Generator::existing(format!("e{i}"), cap, p, rng.random_range(10.0..40.0f64).round()));
    }
    let d0 = (derated * rng.random_range(0.7..1.0)).round();
    let growth: f64 = rng.random_range(1.0..1.15);
    let demand: Vec<f64> = (0..periods).map(|t| (d0 * growth.powi(t as i32)).round()).collect();
    for i in 0..n_cand {
        let cap = rng.random_range(15.0..60.0f64).round();
        let p = outage(rng);
        let invest = (cap * rng.random_range(20.0..200.0)).round();
        let mut g = Generator::candidate(format!("c{i}"), cap, p, rng.random_range(5.0..45.0f64).round(), invest);
        if periods > 1 && rng.random_bool(0.25) {
            g = g.with_earliest_period(rng.random_range(1..=periods));
        }
        gens.push(g);
    }
    SystemSpec::new(gens, demand, 1000.0).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Scales candidate capacities by 1.25 until building everything meets `c`.
pub fn make_satisfiable(spec: SystemSpec, c: &ReliabilityCriterion) -> SystemSpec {
    let mut spec = spec;
    for _ in 0..40 {
        let states = all_states(&spec);
        if meets(&spec, &InvestmentPlan::full(&spec), c, &states) {
            return spec;
        }
        let gens = spec
            .generators()
            .iter()
            .map(|g| {
                let mut g = g.clone();
                if g.is_candidate() {
                    g.capacity_mw = (g.capacity_mw * 1.25).round();
                }
                g
            })
            .collect();
        spec = SystemSpec::new(gens, spec.demands().to_vec(), spec.shed_cost()).unwrap();
    }
    spec
}
