//! Best-bound branch-and-bound over binary variables.

use super::{simplex, LinearProgram, LpSolution, LpStatus, SolverOptions};
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Node {
    bound: f64,
    id: usize,
    /// (variable, fixed value) pairs applied on top of the root bounds.
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the smallest bound (then oldest node) wins.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_mip_with(p: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    p.validate()?;
    let binaries: Vec<usize> = p.binaries().collect();
    if binaries.is_empty() {
        return simplex::solve(p, p.lower(), p.upper(), opts);
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1;
    let mut explored = 0usize;
    let mut iterations = 0usize;
    let mut incumbent: Option<LpSolution> = None;
    let mut lower = p.lower().to_vec();
    let mut upper = p.upper().to_vec();

    let prune = |bound: f64, inc: &Option<LpSolution>| match inc {
        Some(best) => bound >= best.objective - opts.mip_gap * best.objective.abs().max(1.0),
        None => false,
    };

    while let Some(node) = heap.pop() {
        if prune(node.bound, &incumbent) {
            continue;
        }
        if node.id != 0 {
            explored += 1;
            if explored > opts.node_limit {
                return Err(Error::NodeLimit {
                    limit: opts.node_limit,
                    incumbent: incumbent.map(Box::new),
                });
            }
        }

        lower.copy_from_slice(p.lower());
        upper.copy_from_slice(p.upper());
        for &(j, v) in &node.fixings {
            lower[j] = v;
            upper[j] = v;
        }
        let relaxed = simplex::solve(p, &lower, &upper, opts)?;
        iterations += relaxed.iterations;
        match relaxed.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                let mut s = relaxed;
                s.iterations = iterations;
                s.nodes = explored;
                return Ok(s);
            }
            LpStatus::Optimal => {}
        }
        if prune(relaxed.objective, &incumbent) {
            continue;
        }

        let mut branch = None;
        let mut best_frac = opts.tol_int;
        for &j in &binaries {
            let v = relaxed.primal[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac {
                best_frac = frac;
                branch = Some(j);
            }
        }

        match branch {
            None => {
                let mut sol = relaxed;
                for &j in &binaries {
                    sol.primal[j] = sol.primal[j].round();
                }
                incumbent = Some(sol);
            }
            Some(j) => {
                for value in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, value));
                    heap.push(Node {
                        bound: relaxed.objective,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some(mut sol) => {
            sol.iterations = iterations;
            sol.nodes = explored;
            sol
        }
        None => {
            let mut s = LpSolution::without_solution(LpStatus::Infeasible, iterations);
            s.nodes = explored;
            s
        }
    })
}
