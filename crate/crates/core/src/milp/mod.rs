//! MILP models, a branch-and-bound solver over a bounded-variable simplex, and LP-file I/O.

mod bb;
mod lp_format;
mod simplex;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::rational::{to_f64, Q};

pub use lp_format::{export_lp, read_lp, LpParseError};

/// Index of a model variable.
pub type VarId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous { lower: Q, upper: Q },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
}

impl Variable {
    pub fn bounds(&self) -> (Q, Q) {
        match &self.kind {
            VarKind::Binary => (Q::from_integer(0.into()), Q::from_integer(1.into())),
            VarKind::Continuous { lower, upper } => (lower.clone(), upper.clone()),
        }
    }

    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// Sparse linear expression; terms are merged and sorted by variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, Q)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (VarId, Q)>) -> Self {
        let mut e = LinExpr::new();
        for (v, c) in terms {
            e.add(v, c);
        }
        e
    }

    /// Adds `c·v`, merging with an existing term.
    pub fn add(&mut self, v: VarId, c: Q) {
        use num_traits::Zero;
        match self.terms.binary_search_by_key(&v, |t| t.0) {
            Ok(i) => {
                self.terms[i].1 += c;
                if self.terms[i].1.is_zero() {
                    self.terms.remove(i);
                }
            }
            Err(i) => {
                if !c.is_zero() {
                    self.terms.insert(i, (v, c));
                }
            }
        }
    }

    pub fn with(mut self, v: VarId, c: Q) -> Self {
        self.add(v, c);
        self
    }

    /// Value under a float assignment.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| to_f64(c) * values[*v]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub sense: Sense,
    pub rhs: Q,
}

/// Variables, linear constraints and an optional maximization objective.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Maximized when present.
    pub objective: Option<LinExpr>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable { name: name.into(), kind: VarKind::Binary });
        self.variables.len() - 1
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: Q, upper: Q) -> VarId {
        self.variables.push(Variable { name: name.into(), kind: VarKind::Continuous { lower, upper } });
        self.variables.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, expr: LinExpr, sense: Sense, rhs: Q) {
        self.constraints.push(Constraint { name: name.into(), expr, sense, rhs });
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.is_binary()).count()
    }

    pub fn num_continuous(&self) -> usize {
        self.variables.len() - self.num_binaries()
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = Some(expr);
    }

    /// Adds ε ∈ [0, 1] and `weight·ε` to the objective; callers encode `a < b` as `a + ε ≤ b`.
    pub fn add_epsilon(&mut self, name: impl Into<String>, weight: Q) -> VarId {
        let e = self.add_continuous(name, Q::from_integer(0.into()), Q::from_integer(1.into()));
        let mut obj = self.objective.take().unwrap_or_default();
        obj.add(e, weight);
        self.objective = Some(obj);
        e
    }

    /// Checks the model and reports the largest bound magnitude.
    pub fn validate(&self) -> Result<f64, MilpError> {
        let mut largest = 0f64;
        for (i, v) in self.variables.iter().enumerate() {
            let (lo, hi) = v.bounds();
            if lo > hi {
                return Err(MilpError::BadBounds(i));
            }
            largest = largest.max(to_f64(&lo).abs()).max(to_f64(&hi).abs());
        }
        let n = self.variables.len();
        for c in &self.constraints {
            if c.expr.terms.iter().any(|(v, _)| *v >= n) {
                return Err(MilpError::UnknownVariable);
            }
        }
        if let Some(o) = &self.objective {
            if o.terms.iter().any(|(v, _)| *v >= n) {
                return Err(MilpError::UnknownVariable);
            }
        }
        Ok(largest)
    }

    /// Largest violation of constraints and bounds under `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0f64;
        for c in &self.constraints {
            let lhs = c.expr.eval(values);
            let rhs = to_f64(&c.rhs);
            let v = match c.sense {
                Sense::Le => lhs - rhs,
                Sense::Ge => rhs - lhs,
                Sense::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (v, x) in self.variables.iter().zip(values) {
            let (lo, hi) = v.bounds();
            worst = worst.max(to_f64(&lo) - x).max(x - to_f64(&hi));
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Proven optimal (or feasible when there is no objective).
    Optimal,
    /// Feasible incumbent returned after a limit was hit.
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: Status,
    /// Value per variable; empty when infeasible.
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes: u64,
}

impl MilpSolution {
    pub fn infeasible(nodes: u64) -> Self {
        MilpSolution { status: Status::Infeasible, values: Vec::new(), objective: f64::NEG_INFINITY, nodes }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != Status::Infeasible
    }

    /// Exact rational value of variable `v` (binaries are exactly 0 or 1).
    pub fn value(&self, v: VarId) -> Q {
        crate::rational::from_f64(self.values[v])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MilpError {
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("branch-and-bound node limit reached without a feasible solution")]
    NodeLimit,
    #[error("solver was stopped")]
    Stopped,
    #[error("numerical trouble: {0}")]
    NumericalTrouble(String),
    #[error("variable {0} has lower bound above upper bound")]
    BadBounds(usize),
    #[error("constraint refers to an unknown variable")]
    UnknownVariable,
}

/// Cooperative cancellation callback; returns true when the solver should stop.
pub type StopFn = Arc<dyn Fn() -> bool + Send + Sync>;

#[derive(Clone)]
pub struct SolverOptions {
    /// Absolute tolerance for constraint and bound satisfaction.
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub optimality_tol: f64,
    pub node_limit: Option<u64>,
    pub stop: Option<StopFn>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { feasibility_tol: 1e-9, integrality_tol: 1e-6, optimality_tol: 1e-9, node_limit: None, stop: None }
    }
}

impl SolverOptions {
    /// All tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        SolverOptions {
            feasibility_tol: self.feasibility_tol / factor,
            integrality_tol: self.integrality_tol / factor,
            optimality_tol: self.optimality_tol / factor,
            ..self.clone()
        }
    }

    pub(crate) fn stopped(&self) -> bool {
        self.stop.as_ref().is_some_and(|f| f())
    }
}

impl fmt::Debug for SolverOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverOptions")
            .field("feasibility_tol", &self.feasibility_tol)
            .field("integrality_tol", &self.integrality_tol)
            .field("optimality_tol", &self.optimality_tol)
            .field("node_limit", &self.node_limit)
            .field("stop", &self.stop.is_some())
            .finish()
    }
}

/// Bound magnitude above which a warning is logged.
pub const LARGE_BOUND: f64 = 1e9;

/// Solves the MILP by branch and bound.
pub fn solve(model: &MilpModel, opts: &SolverOptions) -> Result<MilpSolution, MilpError> {
    bb::branch_and_bound(model, opts, false)
}

/// Solves the continuous relaxation (binaries relaxed to [0, 1]).
pub fn lp_relax(model: &MilpModel, opts: &SolverOptions) -> Result<MilpSolution, MilpError> {
    bb::branch_and_bound(model, opts, true)
}

#[cfg(test)]
mod tests;
