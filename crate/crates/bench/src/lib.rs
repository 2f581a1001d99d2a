//! Deterministic instances shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan_core::lp::{LinearProgram, Relation};
use relplan_core::{Generator, SystemSpec};

/// A fleet of `existing` stochastic units sized near demand, plus
/// `candidates` stochastic candidates, over `periods` periods of 4% growth.
pub fn fleet(existing: usize, candidates: usize, periods: usize, seed: u64) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens = Vec::new();
    let mut derated = 0.0;
    for i in 0..existing {
        let cap = rng.random_range(30.0..120.0f64).round();
        let p = rng.random_range(0.03..0.12);
        derated += cap * (1.0 - p);
        gens.push(Generator::existing(format!("e{i}"), cap, p, rng.random_range(10.0..50.0f64).round()));
    }
    for i in 0..candidates {
        let cap = rng.random_range(40.0..90.0f64).round();
        let invest = (cap * rng.random_range(100.0..400.0)).round();
        let g = Generator::candidate(format!("c{i}"), cap, rng.random_range(0.02..0.08), 20.0, invest);
        gens.push(g);
    }
    let d0 = (0.9 * derated).round();
    let demand = (0..periods).map(|t| (d0 * 1.04f64.powi(t as i32)).round()).collect();
    SystemSpec::new(gens, demand, 1000.0).expect("fixture is valid")
}

/// Random pure-binary program with `n` binaries and `m` knapsack rows.
pub fn binary_program(n: usize, m: usize, seed: u64) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = LinearProgram::new();
    for _ in 0..n {
        p.add_binary(-rng.random_range(1.0..20.0));
    }
    for _ in 0..m {
        let row = (0..n).map(|j| (j, rng.random_range(1.0..10.0))).collect();
        p.add_row(row, Relation::Le, rng.random_range(n as f64..3.0 * n as f64));
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(fleet(6, 3, 3, 1), fleet(6, 3, 3, 1));
        assert_eq!(fleet(6, 3, 3, 1).candidates().len(), 3);
        assert_eq!(binary_program(10, 3, 2).num_vars(), 10);
    }
}
