//! Bounded-variable revised primal simplex.
//!
//! Every row gets a slack `a_i x + s_i = b_i` whose bounds encode the
//! relation; rows whose slack cannot absorb the initial residual get an
//! artificial column. Phase 1 minimises the artificial sum, phase 2 the real
//! objective. Pricing is Dantzig's rule with a switch to Bland's rule after
//! a streak of degenerate pivots; the ratio test is Harris' two-pass test.

use super::factor::EtaFile;
use super::{LinearProgram, LpSolution, LpStatus, Relation, SolverOptions};
use crate::error::{Error, Result};
use std::collections::VecDeque;

const PIVOT_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 96;
const TRACE_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Ratio {
    step: f64,
    /// `None` means the entering variable moves to its opposite bound.
    leave: Option<usize>,
}

struct Simplex<'a> {
    p: &'a LinearProgram,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    factor: EtaFile,
    iterations: usize,
    max_iterations: usize,
    trace: VecDeque<(usize, usize, Option<usize>, f64)>,
}

pub(crate) fn solve(
    p: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Result<LpSolution> {
    let mut s = Simplex::new(p, lower, upper, opts);
    if let Some(sol) = s.trivially_infeasible_bounds() {
        return Ok(sol);
    }
    if !s.art_row.is_empty() {
        s.run_phase(true)?;
        let infeasibility: f64 = (s.n + s.m..s.total()).map(|j| s.x[j].max(0.0)).sum();
        let bmax = p.rows().iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
        if infeasibility > PRIMAL_TOL * (1.0 + bmax) {
            return Ok(LpSolution::without_solution(LpStatus::Infeasible, s.iterations));
        }
        s.drive_out_artificials();
    }
    match s.run_phase(false)? {
        PhaseEnd::Unbounded => Ok(LpSolution::without_solution(LpStatus::Unbounded, s.iterations)),
        PhaseEnd::Optimal => Ok(s.solution()),
    }
}

impl<'a> Simplex<'a> {
    fn new(p: &'a LinearProgram, lower: &[f64], upper: &[f64], opts: &'a SolverOptions) -> Self {
        let m = p.num_rows();
        let n = p.num_vars();

        let mut counts = vec![0usize; n + 1];
        for row in p.rows() {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in p.rows().iter().enumerate() {
            for &(j, a) in &row.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }

        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        for row in p.rows() {
            let (l, u) = match row.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }

        let mut x = vec![0.0; n + m];
        let mut state = vec![State::Lower; n + m];
        for j in 0..n {
            (x[j], state[j]) = resting_point(lo[j], up[j]);
        }

        let mut residual: Vec<f64> = p.rows().iter().map(|r| r.rhs).collect();
        for j in 0..n {
            if x[j] != 0.0 {
                for k in col_start[j]..col_start[j + 1] {
                    residual[col_row[k]] -= col_val[k] * x[j];
                }
            }
        }

        let mut basis = vec![0; m];
        let mut art_row = Vec::new();
        let mut art_sign = Vec::new();
        let mut factor = EtaFile::default();
        for i in 0..m {
            let s = n + i;
            let r = residual[i];
            if r >= lo[s] - PRIMAL_TOL && r <= up[s] + PRIMAL_TOL {
                x[s] = r;
                state[s] = State::Basic;
                basis[i] = s;
            } else {
                let rest = r.clamp(lo[s], up[s]);
                x[s] = rest;
                state[s] = if rest == up[s] && lo[s] != up[s] {
                    State::Upper
                } else {
                    State::Lower
                };
                let excess = r - rest;
                let sign = excess.signum();
                let a = n + m + art_row.len();
                art_row.push(i);
                art_sign.push(sign);
                x.push(excess.abs());
                state.push(State::Basic);
                lo.push(0.0);
                up.push(f64::INFINITY);
                basis[i] = a;
                factor.push_unit(i, sign);
            }
        }

        let max_iterations = opts
            .max_iterations
            .unwrap_or(50 * (m + n) + 10_000);
        Simplex {
            p,
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row,
            art_sign,
            lower: lo,
            upper: up,
            x,
            state,
            basis,
            factor,
            iterations: 0,
            max_iterations,
            trace: VecDeque::with_capacity(TRACE_LEN),
        }
    }

    fn trivially_infeasible_bounds(&self) -> Option<LpSolution> {
        (0..self.n)
            .any(|j| self.lower[j] > self.upper[j])
            .then(|| LpSolution::without_solution(LpStatus::Infeasible, 0))
    }

    fn total(&self) -> usize {
        self.x.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn nnz(&self, j: usize) -> usize {
        if j < self.n {
            self.col_start[j + 1] - self.col_start[j]
        } else {
            1
        }
    }

    /// Row and sign of a slack or artificial column.
    fn unit_of(&self, j: usize) -> (usize, f64) {
        if j < self.n + self.m {
            (j - self.n, 1.0)
        } else {
            let k = j - self.n - self.m;
            (self.art_row[k], self.art_sign[k])
        }
    }

    fn col_dot(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1])
                .map(|k| y[self.col_row[k]] * self.col_val[k])
                .sum()
        } else {
            let (r, s) = self.unit_of(j);
            s * y[r]
        }
    }

    fn scatter(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                out[self.col_row[k]] += self.col_val[k];
            }
        } else {
            let (r, s) = self.unit_of(j);
            out[r] += s;
        }
    }

    fn phase_cost(&self, j: usize, phase1: bool) -> f64 {
        match (phase1, j) {
            (true, j) if self.is_artificial(j) => 1.0,
            (true, _) => 0.0,
            (false, j) if j < self.n => self.p.cost()[j],
            (false, _) => 0.0,
        }
    }

    fn duals(&self, phase1: bool) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.phase_cost(j, phase1)).collect();
        self.factor.btran(&mut y);
        y
    }

    /// Rebuilds the eta file from scratch for the current basis and
    /// recomputes basic values.
    fn reinvert(&mut self) {
        self.factor.clear();
        let m = self.m;
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let mut structural = Vec::new();
        for &v in &self.basis {
            if v >= self.n {
                let (r, s) = self.unit_of(v);
                assigned[r] = true;
                new_basis[r] = v;
                self.factor.push_unit(r, s);
            } else {
                structural.push(v);
            }
        }
        structural.sort_by_key(|&v| (self.nnz(v), v));

        let mut work = vec![0.0; m];
        for v in structural {
            work.fill(0.0);
            self.scatter(v, &mut work);
            self.factor.ftran(&mut work);
            let mut best = None;
            let mut best_abs = PIVOT_TOL;
            for (r, &a) in work.iter().enumerate() {
                if !assigned[r] && a.abs() > best_abs {
                    best_abs = a.abs();
                    best = Some(r);
                }
            }
            match best {
                Some(r) => {
                    self.factor.push(r, &work);
                    assigned[r] = true;
                    new_basis[r] = v;
                }
                None => {
                    // Dependent column: let a slack take its place.
                    (self.x[v], self.state[v]) = resting_point(self.lower[v], self.upper[v]);
                }
            }
        }
        for r in 0..m {
            if !assigned[r] {
                let s = self.n + r;
                new_basis[r] = s;
                self.state[s] = State::Basic;
            }
        }
        self.basis = new_basis;
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let mut work: Vec<f64> = self.p.rows().iter().map(|r| r.rhs).collect();
        for j in 0..self.total() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                if j < self.n {
                    for k in self.col_start[j]..self.col_start[j + 1] {
                        work[self.col_row[k]] -= self.col_val[k] * xj;
                    }
                } else {
                    let (r, s) = self.unit_of(j);
                    work[r] -= s * xj;
                }
            }
        }
        self.factor.ftran(&mut work);
        for (r, &v) in self.basis.iter().enumerate() {
            self.x[v] = work[r];
        }
    }

    fn run_phase(&mut self, phase1: bool) -> Result<PhaseEnd> {
        let cost_scale = if phase1 {
            1.0
        } else {
            self.p.cost().iter().fold(1.0f64, |a, c| a.max(c.abs()))
        };
        let dual_tol = 1e-9 * cost_scale;
        let mut streak = 0usize;
        let mut bland = false;
        let mut since_refactor = 0usize;
        let mut alpha = vec![0.0; self.m];

        loop {
            if since_refactor >= REFACTOR_EVERY {
                self.reinvert();
                since_refactor = 0;
            }
            let y = self.duals(phase1);

            let mut entering = None;
            let mut best = 0.0;
            for j in 0..self.total() {
                let st = self.state[j];
                if st == State::Basic || self.is_artificial(j) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.phase_cost(j, phase1) - self.col_dot(&y, j);
                let eligible = match st {
                    State::Lower => d < -dual_tol,
                    State::Upper => d > dual_tol,
                    State::Free => d.abs() > dual_tol,
                    State::Basic => false,
                };
                if eligible {
                    if bland {
                        entering = Some((j, d));
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        entering = Some((j, d));
                    }
                }
            }
            let Some((q, d)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };
            let dir = if d < 0.0 { 1.0 } else { -1.0 };

            alpha.fill(0.0);
            self.scatter(q, &mut alpha);
            self.factor.ftran(&mut alpha);

            let Some(ratio) = self.ratio_test(q, dir, &alpha, bland) else {
                if phase1 {
                    return Err(self.breakdown("phase 1 reported an unbounded ray"));
                }
                return Ok(PhaseEnd::Unbounded);
            };

            let t = ratio.step;
            self.x[q] += dir * t;
            for r in 0..self.m {
                if alpha[r] != 0.0 {
                    let v = self.basis[r];
                    self.x[v] -= dir * t * alpha[r];
                }
            }
            match ratio.leave {
                None => {
                    if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        self.state[q] = State::Upper;
                    } else {
                        self.x[q] = self.lower[q];
                        self.state[q] = State::Lower;
                    }
                }
                Some(r) => {
                    let v = self.basis[r];
                    if -dir * alpha[r] < 0.0 {
                        self.x[v] = self.lower[v];
                        self.state[v] = State::Lower;
                    } else {
                        self.x[v] = self.upper[v];
                        self.state[v] = State::Upper;
                    }
                    self.basis[r] = q;
                    self.state[q] = State::Basic;
                    self.factor.push(r, &alpha);
                    since_refactor += 1;
                }
            }

            if t <= 1e-12 {
                streak += 1;
                if streak >= self.opts.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = false;
            }

            self.iterations += 1;
            if self.trace.len() == TRACE_LEN {
                self.trace.pop_front();
            }
            self.trace.push_back((self.iterations, q, ratio.leave, t));
            if self.iterations >= self.max_iterations {
                return Err(self.breakdown("iteration limit reached (cycling or stalling)"));
            }
        }
    }

    /// Harris two-pass ratio test; Bland mode uses the exact minimum ratio
    /// and breaks ties by the smallest leaving column index.
    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], bland: bool) -> Option<Ratio> {
        let tol = if bland { 0.0 } else { PRIMAL_TOL };
        let range = self.upper[q] - self.lower[q];
        let mut tmax = f64::INFINITY;
        for r in 0..self.m {
            let a = alpha[r];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            if let Some(bound) = self.row_ratio(r, -dir * a, tol) {
                tmax = tmax.min(bound);
            }
        }
        if tmax.is_infinite() && range.is_infinite() {
            return None;
        }

        let mut leave = None;
        let mut leave_step = f64::INFINITY;
        let mut leave_key = 0.0f64;
        for r in 0..self.m {
            let a = alpha[r];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let Some(exact) = self.row_ratio(r, -dir * a, 0.0) else {
                continue;
            };
            let limit = if bland { tmax + 1e-12 * (1.0 + tmax) } else { tmax };
            if exact > limit {
                continue;
            }
            let better = match leave {
                None => true,
                Some(prev) if bland => self.basis[r] < self.basis[prev],
                Some(_) => a.abs() > leave_key,
            };
            if better {
                leave = Some(r);
                leave_step = exact;
                leave_key = a.abs();
            }
        }

        if range.is_finite() && (leave.is_none() || range <= leave_step) {
            return Some(Ratio {
                step: range,
                leave: None,
            });
        }
        leave.map(|r| Ratio {
            step: leave_step.max(0.0),
            leave: Some(r),
        })
    }

    /// Step at which basic variable in row `r` hits a bound when it changes at
    /// rate `delta` per unit step, with feasibility tolerance `tol`.
    fn row_ratio(&self, r: usize, delta: f64, tol: f64) -> Option<f64> {
        let v = self.basis[r];
        if delta < 0.0 && self.lower[v].is_finite() {
            Some(((self.x[v] - self.lower[v]).max(0.0) + tol) / -delta)
        } else if delta > 0.0 && self.upper[v].is_finite() {
            Some(((self.upper[v] - self.x[v]).max(0.0) + tol) / delta)
        } else {
            None
        }
    }

    /// Pivots zero-valued basic artificials out of the basis where possible
    /// and fixes all artificials at zero.
    fn drive_out_artificials(&mut self) {
        let mut rho = vec![0.0; self.m];
        let mut alpha = vec![0.0; self.m];
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            rho.fill(0.0);
            rho[r] = 1.0;
            self.factor.btran(&mut rho);
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..self.n + self.m {
                if self.state[j] == State::Basic {
                    continue;
                }
                let v = self.col_dot(&rho, j).abs();
                if v > best_abs {
                    best_abs = v;
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                alpha.fill(0.0);
                self.scatter(q, &mut alpha);
                self.factor.ftran(&mut alpha);
                let a = self.basis[r];
                self.x[a] = 0.0;
                self.state[a] = State::Lower;
                self.basis[r] = q;
                self.state[q] = State::Basic;
                self.factor.push(r, &alpha);
            }
        }
        for j in self.n + self.m..self.total() {
            self.upper[j] = 0.0;
            if self.state[j] != State::Basic {
                self.x[j] = 0.0;
            }
        }
        self.reinvert();
    }

    fn solution(&self) -> LpSolution {
        let duals = self.duals(false);
        let primal = self.x[..self.n].to_vec();
        let reduced_costs = (0..self.n)
            .map(|j| self.p.cost()[j] - self.col_dot(&duals, j))
            .collect();
        LpSolution {
            status: LpStatus::Optimal,
            objective: self.p.objective_at(&primal),
            primal,
            duals,
            reduced_costs,
            iterations: self.iterations,
            nodes: 0,
        }
    }

    fn breakdown(&self, message: &str) -> Error {
        Error::Numerical {
            message: format!("{message} after {} iterations", self.iterations),
            log: self
                .trace
                .iter()
                .map(|(it, q, r, t)| match r {
                    Some(r) => format!("iter {it}: column {q} enters at row {r}, step {t:e}"),
                    None => format!("iter {it}: column {q} flips bound, step {t:e}"),
                })
                .collect(),
        }
    }
}

/// Value and status of a nonbasic variable placed at its preferred bound.
fn resting_point(lower: f64, upper: f64) -> (f64, State) {
    if lower.is_finite() {
        (lower, State::Lower)
    } else if upper.is_finite() {
        (upper, State::Upper)
    } else {
        (0.0, State::Free)
    }
}
