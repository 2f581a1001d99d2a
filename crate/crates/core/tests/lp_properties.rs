mod common;

use proptest::prelude::*;
use rand::Rng;
use relplan_core::lp::{solve_lp, solve_mip, LinearProgram, LpStatus, Relation};

#[derive(Debug, Clone)]
struct Data {
    cost: Vec<f64>,
    bounds: Vec<(f64, f64)>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl Data {
    fn build(&self) -> LinearProgram {
        let mut p = LinearProgram::new();
        for (c, &(lo, hi)) in self.cost.iter().zip(&self.bounds) {
            p.add_var(*c, lo, hi);
        }
        for (a, rel, rhs) in &self.rows {
            let coeffs = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
            p.add_row(coeffs, *rel, *rhs);
        }
        p
    }

    fn with_rhs(&self, row: usize, delta: f64) -> Data {
        let mut d = self.clone();
        d.rows[row].2 += delta;
        d
    }
}

/// Feasible by construction around a random interior point; bounded unless a
/// variable is free with an unlucky cost.
fn lp_data() -> impl Strategy<Value = Data> {
    (1usize..7, 1usize..6, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut rng = common::rng(seed);
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| match rng.random_range(0..4) {
                0 => (-5.0, 5.0),
                1 => (0.0, f64::INFINITY),
                _ => (0.0, rng.random_range(1..10) as f64),
            })
            .collect();
        let x0: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| {
                let hi = if hi.is_finite() { hi } else { lo + 10.0 };
                rng.random_range(lo..=hi)
            })
            .collect();
        let cost = (0..n)
            .map(|j| {
                let c = rng.random_range(-10..=10) as f64;
                // Keep unbounded-above columns from driving the objective to -inf.
                if bounds[j].1.is_infinite() { c.abs() } else { c }
            })
            .collect();
        let rows = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..n)
                    .map(|_| if rng.random_bool(0.6) { rng.random_range(-6..=6) as f64 } else { 0.0 })
                    .collect();
                let ax: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
                let slack = rng.random_range(0.0..3.0);
                match rng.random_range(0..3) {
                    0 => (a, Relation::Le, ax + slack),
                    1 => (a, Relation::Ge, ax - slack),
                    _ => (a, Relation::Eq, ax),
                }
            })
            .collect();
        Data { cost, bounds, rows }
    })
}

/// `b^T y + sum_j min_{x_j in [l_j, u_j]} (c - A^T y)_j x_j`.
fn dual_objective(d: &Data, y: &[f64]) -> f64 {
    let mut obj: f64 = d.rows.iter().zip(y).map(|(r, y)| r.2 * y).sum();
    for j in 0..d.cost.len() {
        let reduced = d.cost[j] - d.rows.iter().zip(y).map(|(r, y)| r.0[j] * y).sum::<f64>();
        let (lo, hi) = d.bounds[j];
        if reduced > 1e-9 {
            obj += reduced * lo;
        } else if reduced < -1e-9 {
            obj += reduced * hi;
        }
    }
    obj
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn strong_duality_and_dual_signs(d in lp_data()) {
        let sol = solve_lp(&d.build()).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let p = d.build();
        prop_assert!(p.max_violation(&sol.primal) <= 1e-7);
        let dual = dual_objective(&d, &sol.duals);
        prop_assert!((sol.objective - dual).abs() <= 1e-7 * (1.0 + sol.objective.abs()),
            "primal {} dual {}", sol.objective, dual);
        for (r, y) in d.rows.iter().zip(&sol.duals) {
            match r.1 {
                Relation::Le => prop_assert!(*y <= 1e-9),
                Relation::Ge => prop_assert!(*y >= -1e-9),
                Relation::Eq => {}
            }
        }
    }

    #[test]
    fn duals_are_subgradients_of_the_value_function(d in lp_data(), pick in any::<prop::sample::Index>()) {
        let base = solve_lp(&d.build()).unwrap();
        prop_assert_eq!(base.status, LpStatus::Optimal);
        let i = pick.index(d.rows.len());
        for delta in [1e-3, -1e-3] {
            let moved = solve_lp(&d.with_rhs(i, delta).build()).unwrap();
            if moved.status != LpStatus::Optimal {
                continue;
            }
            let predicted = base.objective + base.duals[i] * delta;
            prop_assert!(moved.objective >= predicted - 1e-7 * (1.0 + base.objective.abs()),
                "v(b+d) = {} < {}", moved.objective, predicted);
        }
    }
}

#[test]
fn dispatch_rhs_perturbation_matches_duals() {
    let build = |d: f64, cap1: f64| {
        let mut p = LinearProgram::new();
        let g1 = p.add_var(10.0, 0.0, f64::INFINITY);
        let g2 = p.add_var(20.0, 0.0, f64::INFINITY);
        let r = p.add_var(1000.0, 0.0, f64::INFINITY);
        p.add_row(vec![(g1, 1.0), (g2, 1.0), (r, 1.0)], Relation::Eq, d);
        p.add_row(vec![(g1, 1.0)], Relation::Le, cap1);
        p.add_row(vec![(g2, 1.0)], Relation::Le, 40.0);
        p
    };
    let base = solve_lp(&build(100.0, 72.0)).unwrap();
    let delta = 1e-4;
    let up_d = solve_lp(&build(100.0 + delta, 72.0)).unwrap();
    let up_c = solve_lp(&build(100.0, 72.0 + delta)).unwrap();
    assert!(((up_d.objective - base.objective) / delta - base.duals[0]).abs() < 1e-6);
    assert!(((up_c.objective - base.objective) / delta - base.duals[1]).abs() < 1e-6);
}

#[test]
fn infeasible_and_unbounded_are_statuses() {
    let mut p = LinearProgram::new();
    let x = p.add_var(1.0, 0.0, f64::INFINITY);
    p.add_row(vec![(x, 1.0)], Relation::Le, 1.0);
    p.add_row(vec![(x, 1.0)], Relation::Ge, 2.0);
    assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);

    let mut q = LinearProgram::new();
    let x = q.add_var(-1.0, 0.0, f64::INFINITY);
    let y = q.add_var(0.0, 0.0, f64::INFINITY);
    q.add_row(vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
    assert_eq!(solve_lp(&q).unwrap().status, LpStatus::Unbounded);
}

/// Minimum over all `2^n` binary points, or `None` when none is feasible.
fn enumerate_binary(cost: &[f64], rows: &[(Vec<f64>, Relation, f64)]) -> Option<f64> {
    let n = cost.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| f64::from(mask >> j & 1)).collect();
        let ok = rows.iter().all(|(a, rel, rhs)| {
            let lhs: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
            match rel {
                Relation::Le => lhs <= rhs + 1e-9,
                Relation::Ge => lhs >= rhs - 1e-9,
                Relation::Eq => (lhs - rhs).abs() <= 1e-9,
            }
        });
        if ok {
            let v: f64 = cost.iter().zip(&x).map(|(c, x)| c * x).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = common::rng(41);
    for case in 0..150 {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(1..=5);
        let cost: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=10) as f64).collect();
        let rows: Vec<(Vec<f64>, Relation, f64)> = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=8) as f64).collect();
                let rel = match rng.random_range(0..5) {
                    0 => Relation::Ge,
                    1 => Relation::Eq,
                    _ => Relation::Le,
                };
                let rhs = rng.random_range(-3..=(2 * n as i32 + 4)) as f64;
                (a, rel, rhs)
            })
            .collect();
        let mut p = LinearProgram::new();
        for &c in &cost {
            p.add_binary(c);
        }
        for (a, rel, rhs) in &rows {
            p.add_row(a.iter().copied().enumerate().collect(), *rel, *rhs);
        }
        let sol = solve_mip(&p).unwrap();
        match enumerate_binary(&cost, &rows) {
            None => assert_eq!(sol.status, LpStatus::Infeasible, "case {case}"),
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                assert!((sol.objective - best).abs() <= 1e-7, "case {case}: {} vs {best}", sol.objective);
                assert!(sol.primal.iter().all(|v| *v == 0.0 || *v == 1.0));
            }
        }
    }
}

#[test]
fn mixed_program_matches_enumeration_over_binaries() {
    let mut rng = common::rng(7);
    for case in 0..40 {
        let nb = rng.random_range(1..=6);
        let mut p = LinearProgram::new();
        let mut cost = Vec::new();
        for _ in 0..nb {
            let c = rng.random_range(0..=20) as f64;
            cost.push(c);
            p.add_binary(c);
        }
        // Two continuous producers that can be switched on by the binaries.
        let y: Vec<usize> = (0..2).map(|_| p.add_var(rng.random_range(1..=5) as f64, 0.0, 10.0)).collect();
        let caps: Vec<f64> = (0..nb).map(|_| rng.random_range(1..=8) as f64).collect();
        let need = rng.random_range(2..=12) as f64;
        let mut row: Vec<(usize, f64)> = y.iter().map(|&v| (v, 1.0)).collect();
        row.extend((0..nb).map(|j| (j, caps[j])));
        p.add_row(row, Relation::Ge, need);
        p.add_row(vec![(y[0], 1.0), (y[1], 1.0)], Relation::Le, rng.random_range(0..=6) as f64);

        let sol = solve_mip(&p).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << nb) {
            let mut q = p.clone();
            for j in 0..nb {
                let v = f64::from(mask >> j & 1);
                q.set_bounds(j, v, v);
            }
            q.relax();
            let s = solve_lp(&q).unwrap();
            if s.status == LpStatus::Optimal {
                best = best.min(s.objective);
            }
        }
        if best.is_finite() {
            assert!((sol.objective - best).abs() <= 1e-7, "case {case}");
        } else {
            assert_eq!(sol.status, LpStatus::Infeasible);
        }
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = common::rng(3);
    let n = 10;
    let mut p = LinearProgram::new();
    for _ in 0..n {
        p.add_binary(rng.random_range(-10.0..10.0));
    }
    for _ in 0..4 {
        let row = (0..n).map(|j| (j, rng.random_range(-3.0..5.0))).collect();
        p.add_row(row, Relation::Le, rng.random_range(2.0..8.0));
    }
    let a = solve_mip(&p).unwrap();
    let b = solve_mip(&p).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.primal, b.primal);
    assert_eq!((a.iterations, a.nodes), (b.iterations, b.nodes));
}
