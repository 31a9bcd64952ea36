//! Dense bounded-variable simplex with primal and dual iterations.
//!
//! Rows read `A·x − r = 0`; each logical `r_i` carries the row bounds, so all
//! right-hand sides are zero and every column has explicit bounds.

use alloc::vec;
use alloc::vec::Vec;

use super::{MilpError, SolverOptions};

/// Outcome of an LP solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
}

/// Basis snapshot used to warm-start a node.
#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    basis: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Tol {
    feas: f64,
    opt: f64,
    pivot: f64,
}

pub(crate) struct Lp {
    m: usize,
    width: usize,
    /// Sparse original columns.
    cols: Vec<Vec<(usize, f64)>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    cost: Vec<f64>,
    t: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    pub x: Vec<f64>,
    since_reinvert: usize,
    tol: Tol,
    artificial_start: usize,
}

const NONBASIC: usize = usize::MAX;
const DEGENERATE_STREAK: usize = 50;

impl Lp {
    /// Builds the root LP with a slack/artificial starting basis.
    ///
    /// `rows` holds the structural coefficients of each row with its bounds.
    pub fn new(
        lo: &[f64],
        hi: &[f64],
        cost: &[f64],
        rows: &[(Vec<(usize, f64)>, f64, f64)],
        opts: &SolverOptions,
    ) -> Self {
        let n = lo.len();
        let m = rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
        for (i, (terms, _, _)) in rows.iter().enumerate() {
            for &(j, c) in terms {
                cols[j].push((i, c));
            }
            cols[n + i].push((i, -1.0));
        }
        let mut lo_all: Vec<f64> = lo.to_vec();
        let mut hi_all: Vec<f64> = hi.to_vec();
        for (_, l, h) in rows {
            lo_all.push(*l);
            hi_all.push(*h);
        }
        let mut x: Vec<f64> = lo.to_vec();
        let mut at_upper = vec![false; n + m];
        x.extend(core::iter::repeat(0.0).take(m));
        let mut basis = vec![0usize; m];
        let tol = Tol { feas: opts.feasibility_tol / 10.0, opt: opts.optimality_tol, pivot: 1e-9 };
        // Row activities at the starting point decide logical or artificial basics.
        let mut artificials: Vec<(usize, f64, f64)> = Vec::new();
        for (i, (terms, l, h)) in rows.iter().enumerate() {
            let v: f64 = terms.iter().map(|&(j, c)| c * x[j]).sum();
            if v < *l - tol.feas {
                x[n + i] = *l;
                artificials.push((i, 1.0, *l - v));
            } else if v > *h + tol.feas {
                x[n + i] = *h;
                at_upper[n + i] = true;
                artificials.push((i, -1.0, v - *h));
            } else {
                x[n + i] = v;
                basis[i] = n + i;
            }
        }
        let artificial_start = n + m;
        for &(i, sign, value) in &artificials {
            let j = cols.len();
            cols.push(vec![(i, sign)]);
            lo_all.push(0.0);
            hi_all.push(f64::INFINITY);
            x.push(value);
            at_upper.push(false);
            basis[i] = j;
        }
        let width = cols.len();
        let mut cost_all = cost.to_vec();
        cost_all.resize(width, 0.0);
        let mut lp = Lp {
            m,
            width,
            cols,
            lo: lo_all,
            hi: hi_all,
            cost: cost_all,
            t: vec![0.0; m * width],
            d: vec![0.0; width],
            basis,
            pos: vec![NONBASIC; width],
            at_upper,
            x,
            since_reinvert: 0,
            tol,
            artificial_start,
        };
        // The starting basis is diagonal, so the tableau is each row scaled by its basic coefficient.
        for j in 0..width {
            for &(i, c) in &lp.cols[j] {
                lp.t[i * width + j] = c;
            }
        }
        for i in 0..m {
            let b = lp.basis[i];
            let piv = lp.t[i * width + b];
            for j in 0..width {
                lp.t[i * width + j] /= piv;
            }
            lp.pos[b] = i;
        }
        lp
    }

    pub fn num_artificials(&self) -> usize {
        self.width - self.artificial_start
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.width..(i + 1) * self.width]
    }

    fn recompute_duals(&mut self) {
        let w = self.width;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.d[j] -= cb * self.t[i * w + j];
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Sets every nonbasic column to its active bound and recomputes the basics.
    pub fn recompute_primal(&mut self) {
        let w = self.width;
        for j in 0..w {
            if self.pos[j] == NONBASIC {
                self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
                if !self.x[j].is_finite() {
                    // A column may only rest at a finite bound.
                    self.at_upper[j] = !self.at_upper[j];
                    self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
                }
            }
        }
        for i in 0..self.m {
            let mut v = 0.0;
            let row = &self.t[i * w..(i + 1) * w];
            for j in 0..w {
                if self.pos[j] == NONBASIC && row[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.t[r * w + q];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= piv;
            }
            row[q] = 1.0;
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for &j in &nz {
                    row[j] -= f * pivot_row[j];
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.pos[leaving] = NONBASIC;
        self.basis[r] = q;
        self.pos[q] = r;
        self.since_reinvert += 1;
    }

    /// Rebuilds the tableau from the original columns for the current basis.
    pub fn reinvert(&mut self) -> Result<(), MilpError> {
        let (m, w) = (self.m, self.width);
        let mut t = vec![0.0; m * w];
        for j in 0..w {
            for &(i, c) in &self.cols[j] {
                t[i * w + j] = c;
            }
        }
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let mut order: Vec<usize> = self.basis.clone();
        order.sort_unstable();
        for &c in &order {
            let mut best = usize::MAX;
            let mut best_val = 0.0;
            for i in 0..m {
                if !assigned[i] && t[i * w + c].abs() > best_val {
                    best_val = t[i * w + c].abs();
                    best = i;
                }
            }
            if best == usize::MAX || best_val < 1e-11 {
                return Err(MilpError::NumericalTrouble(alloc::string::String::from("singular basis")));
            }
            assigned[best] = true;
            new_basis[best] = c;
            let piv = t[best * w + c];
            for j in 0..w {
                t[best * w + j] /= piv;
            }
            let prow: Vec<f64> = t[best * w..(best + 1) * w].to_vec();
            for i in 0..m {
                if i != best {
                    let f = t[i * w + c];
                    if f != 0.0 {
                        for j in 0..w {
                            if prow[j] != 0.0 {
                                t[i * w + j] -= f * prow[j];
                            }
                        }
                        t[i * w + c] = 0.0;
                    }
                }
            }
        }
        self.t = t;
        self.basis = new_basis;
        self.pos = vec![NONBASIC; w];
        for (i, &b) in self.basis.iter().enumerate() {
            self.pos[b] = i;
        }
        self.since_reinvert = 0;
        self.recompute_duals();
        self.recompute_primal();
        Ok(())
    }

    fn maybe_reinvert(&mut self) -> Result<(), MilpError> {
        if self.since_reinvert >= 100.max(self.m) {
            self.reinvert()?;
        }
        Ok(())
    }

    fn iteration_limit(&self) -> usize {
        50 * (self.m + self.width) + 10_000
    }

    fn objective_value(&self) -> f64 {
        (0..self.width).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Primal simplex from a primal feasible basis.
    fn primal(&mut self, opts: &SolverOptions) -> Result<(), MilpError> {
        let w = self.width;
        let mut streak = 0usize;
        for it in 0..self.iteration_limit() {
            if it % 100 == 99 && opts.stopped() {
                return Err(MilpError::Stopped);
            }
            self.maybe_reinvert()?;
            let bland = streak >= DEGENERATE_STREAK;
            let mut q = usize::MAX;
            let mut best = 0.0;
            for j in 0..w {
                if self.pos[j] != NONBASIC || self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let dj = self.d[j];
                let score = if !self.at_upper[j] && dj > self.tol.opt {
                    dj
                } else if self.at_upper[j] && dj < -self.tol.opt {
                    -dj
                } else {
                    continue;
                };
                if bland {
                    q = j;
                    break;
                }
                if score > best {
                    best = score;
                    q = j;
                }
            }
            if q == usize::MAX {
                return Ok(());
            }
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };
            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let alpha = -self.t[i * w + q] * dir;
                let b = self.basis[i];
                if alpha > self.tol.pivot {
                    theta_max = theta_max.min((self.hi[b] - self.x[b] + self.tol.feas) / alpha);
                } else if alpha < -self.tol.pivot {
                    theta_max = theta_max.min((self.x[b] - self.lo[b] + self.tol.feas) / -alpha);
                }
            }
            let range = self.hi[q] - self.lo[q];
            if range.is_finite() && range <= theta_max {
                // Bound flip.
                let theta = range;
                for i in 0..self.m {
                    let alpha = -self.t[i * w + q] * dir;
                    if alpha != 0.0 {
                        let b = self.basis[i];
                        self.x[b] += alpha * theta;
                    }
                }
                self.at_upper[q] = !self.at_upper[q];
                self.x[q] = if self.at_upper[q] { self.hi[q] } else { self.lo[q] };
                streak = 0;
                continue;
            }
            if !theta_max.is_finite() {
                return Err(MilpError::NumericalTrouble(alloc::string::String::from("unbounded direction")));
            }
            let mut r = usize::MAX;
            let mut best_alpha = 0.0;
            let mut best_ratio = 0.0;
            for i in 0..self.m {
                let alpha = -self.t[i * w + q] * dir;
                let b = self.basis[i];
                let gap = if alpha > self.tol.pivot {
                    self.hi[b] - self.x[b]
                } else if alpha < -self.tol.pivot {
                    self.x[b] - self.lo[b]
                } else {
                    continue;
                };
                let ratio = gap.max(0.0) / alpha.abs();
                if ratio <= theta_max {
                    let better = if bland {
                        r == usize::MAX || b < self.basis[r]
                    } else {
                        alpha.abs() > best_alpha
                    };
                    if better {
                        r = i;
                        best_alpha = alpha.abs();
                        best_ratio = ratio;
                    }
                }
            }
            let alpha_r = -self.t[r * w + q] * dir;
            let theta = best_ratio;
            streak = if theta <= self.tol.feas { streak + 1 } else { 0 };
            for i in 0..self.m {
                let alpha = -self.t[i * w + q] * dir;
                if alpha != 0.0 {
                    let b = self.basis[i];
                    self.x[b] += alpha * theta;
                }
            }
            self.x[q] += dir * theta;
            let leaving = self.basis[r];
            self.pivot(r, q);
            if alpha_r > 0.0 {
                self.at_upper[leaving] = true;
                self.x[leaving] = self.hi[leaving];
            } else {
                self.at_upper[leaving] = false;
                self.x[leaving] = self.lo[leaving];
            }
        }
        Err(MilpError::IterationLimit)
    }

    /// Dual simplex from a dual feasible basis.
    fn dual(&mut self, opts: &SolverOptions) -> Result<LpStatus, MilpError> {
        let w = self.width;
        for it in 0..self.iteration_limit() {
            if it % 100 == 99 && opts.stopped() {
                return Err(MilpError::Stopped);
            }
            self.maybe_reinvert()?;
            let mut r = usize::MAX;
            let mut worst = self.tol.feas;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]);
                if v > worst {
                    worst = v;
                    r = i;
                }
            }
            if r == usize::MAX {
                return Ok(LpStatus::Optimal);
            }
            let b = self.basis[r];
            let increase = self.x[b] < self.lo[b];
            let target = if increase { self.lo[b] } else { self.hi[b] };
            let mut q = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            let mut best_abs = 0.0;
            for j in 0..w {
                if self.pos[j] != NONBASIC || self.hi[j] - self.lo[j] <= 0.0 {
                    continue;
                }
                let a = self.t[r * w + j];
                let ok = if increase {
                    (!self.at_upper[j] && a < -self.tol.pivot) || (self.at_upper[j] && a > self.tol.pivot)
                } else {
                    (!self.at_upper[j] && a > self.tol.pivot) || (self.at_upper[j] && a < -self.tol.pivot)
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_abs) {
                    best_ratio = ratio;
                    best_abs = a.abs();
                    q = j;
                }
            }
            if q == usize::MAX {
                return Ok(LpStatus::Infeasible);
            }
            let delta = (target - self.x[b]) / -self.t[r * w + q];
            for i in 0..self.m {
                let a = self.t[i * w + q];
                if a != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= a * delta;
                }
            }
            self.x[q] += delta;
            self.pivot(r, q);
            self.at_upper[b] = !increase;
            self.x[b] = target;
        }
        Err(MilpError::IterationLimit)
    }

    /// Two-phase solve from the constructed starting basis.
    pub fn solve_root(&mut self, opts: &SolverOptions) -> Result<LpStatus, MilpError> {
        let objective = core::mem::take(&mut self.cost);
        if self.num_artificials() > 0 {
            self.cost = vec![0.0; self.width];
            for j in self.artificial_start..self.width {
                self.cost[j] = -1.0;
            }
            self.recompute_duals();
            self.primal(opts)?;
            let scale = self.lo.iter().chain(&self.hi).filter(|v| v.is_finite()).fold(1.0f64, |a, v| a.max(v.abs()));
            let infeas: f64 = (self.artificial_start..self.width).map(|j| self.x[j]).sum();
            for j in self.artificial_start..self.width {
                self.hi[j] = 0.0;
            }
            if infeas > self.tol.feas * scale {
                self.cost = objective;
                return Ok(LpStatus::Infeasible);
            }
            self.recompute_primal();
        }
        self.cost = objective;
        self.recompute_duals();
        self.finish(opts)
    }

    /// Restores primal feasibility with the dual simplex, then polishes with the primal.
    pub fn resolve(&mut self, opts: &SolverOptions) -> Result<LpStatus, MilpError> {
        self.recompute_primal();
        if self.dual(opts)? == LpStatus::Infeasible {
            return Ok(LpStatus::Infeasible);
        }
        self.finish(opts)
    }

    fn finish(&mut self, opts: &SolverOptions) -> Result<LpStatus, MilpError> {
        for _ in 0..3 {
            self.primal(opts)?;
            self.recompute_primal();
            let bad = (0..self.m).any(|i| {
                let b = self.basis[i];
                self.x[b] < self.lo[b] - self.tol.feas || self.x[b] > self.hi[b] + self.tol.feas
            });
            if !bad {
                return Ok(LpStatus::Optimal);
            }
            // Drift: rebuild the tableau and repair with the dual simplex.
            self.reinvert()?;
            if self.dual(opts)? == LpStatus::Infeasible {
                return Ok(LpStatus::Infeasible);
            }
        }
        Err(MilpError::NumericalTrouble(alloc::string::String::from("basic values drift out of bounds")))
    }

    pub fn objective(&self) -> f64 {
        self.objective_value()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { basis: self.basis.clone(), at_upper: self.at_upper.clone() }
    }

    pub fn restore(&mut self, s: &Snapshot) -> Result<(), MilpError> {
        self.basis = s.basis.clone();
        self.at_upper = s.at_upper.clone();
        self.reinvert()
    }
}
