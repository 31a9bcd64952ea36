//! Best-bound branch and bound with warm-started dual simplex re-solves.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::simplex::{Lp, LpStatus, Snapshot};
use super::{MilpError, MilpModel, MilpSolution, Sense, SolverOptions, Status, LARGE_BOUND};
use crate::rational::to_f64;

struct Node {
    bound: f64,
    id: u64,
    parent: u64,
    fixes: Rc<Vec<(usize, f64)>>,
    snap: Option<Rc<Snapshot>>,
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
    /// Higher bound first; among equal bounds the most recently created node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(self.id.cmp(&other.id))
    }
}

const POLISHED: u64 = u64::MAX;

fn round_binary(x: f64) -> f64 {
    if x >= 0.5 {
        1.0
    } else {
        0.0
    }
}

pub(super) fn branch_and_bound(model: &MilpModel, opts: &SolverOptions, relax_only: bool) -> Result<MilpSolution, MilpError> {
    let largest = model.validate()?;
    if largest > LARGE_BOUND {
        log::warn!("variable bound magnitude {:e} may cause numerical trouble", largest);
    }
    let n = model.variables.len();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for v in &model.variables {
        let (l, h) = v.bounds();
        lo.push(to_f64(&l));
        hi.push(to_f64(&h));
    }
    let mut cost = alloc::vec![0.0; n];
    if let Some(o) = &model.objective {
        for (v, c) in &o.terms {
            cost[*v] = to_f64(c);
        }
    }
    let rows: Vec<(Vec<(usize, f64)>, f64, f64)> = model
        .constraints
        .iter()
        .map(|c| {
            let terms = c.expr.terms.iter().map(|(v, q)| (*v, to_f64(q))).collect();
            let r = to_f64(&c.rhs);
            let (l, h) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, r),
                Sense::Ge => (r, f64::INFINITY),
                Sense::Eq => (r, r),
            };
            (terms, l, h)
        })
        .collect();
    let binaries: Vec<usize> = (0..n).filter(|&v| model.variables[v].is_binary()).collect();
    let mut lp = Lp::new(&lo, &hi, &cost, &rows, opts);
    let root_status = lp.solve_root(opts)?;
    if root_status == LpStatus::Infeasible {
        return Ok(MilpSolution::infeasible(1));
    }
    let extract = |lp: &Lp, round: bool| -> Vec<f64> {
        (0..n)
            .map(|v| {
                let x = lp.x[v].clamp(lo[v], hi[v]);
                if round && model.variables[v].is_binary() {
                    round_binary(x)
                } else {
                    x
                }
            })
            .collect()
    };
    if relax_only {
        let values = extract(&lp, false);
        let objective = model.objective.as_ref().map_or(0.0, |o| o.eval(&values));
        return Ok(MilpSolution { status: Status::Optimal, values, objective, nodes: 1 });
    }

    let mut queue = BinaryHeap::new();
    queue.push(Node { bound: f64::INFINITY, id: 0, parent: POLISHED, fixes: Rc::new(Vec::new()), snap: None });
    let mut next_id = 1u64;
    let mut current = 0u64;
    let mut nodes = 0u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let gap = |inc: f64| opts.optimality_tol * inc.abs().max(1.0);
    let mut limited = None;

    while let Some(node) = queue.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound <= inc + gap(*inc) {
                break;
            }
        }
        if opts.stopped() {
            limited = Some(MilpError::Stopped);
            break;
        }
        if opts.node_limit.is_some_and(|l| nodes >= l) {
            limited = Some(MilpError::NodeLimit);
            break;
        }
        nodes += 1;
        let status = if node.id == 0 {
            root_status
        } else {
            lp.lo[..n].copy_from_slice(&lo);
            lp.hi[..n].copy_from_slice(&hi);
            for &(v, x) in node.fixes.iter() {
                lp.lo[v] = x;
                lp.hi[v] = x;
            }
            if current != node.parent {
                lp.restore(node.snap.as_ref().expect("non-root nodes carry a basis"))?;
            }
            lp.resolve(opts)?
        };
        current = node.id;
        if status == LpStatus::Infeasible {
            continue;
        }
        let obj = lp.objective();
        if let Some((inc, _)) = &incumbent {
            if obj <= inc + gap(*inc) {
                continue;
            }
        }
        let mut branch_var = binaries.iter().copied().find(|&b| {
            let x = lp.x[b];
            (x - round_binary(x)).abs() > opts.integrality_tol
        });
        let snap = Rc::new(lp.snapshot());
        let node_x: Vec<f64> = lp.x[..n].to_vec();
        if branch_var.is_none() {
            // Polish: fix the rounded binaries and re-solve.
            for &b in &binaries {
                let r = round_binary(lp.x[b]);
                lp.lo[b] = r;
                lp.hi[b] = r;
            }
            current = POLISHED;
            let mut status = lp.resolve(opts)?;
            let mut values = extract(&lp, true);
            if status == LpStatus::Optimal && model.max_violation(&values) > opts.feasibility_tol {
                lp.reinvert()?;
                status = lp.resolve(opts)?;
                values = extract(&lp, true);
                if status == LpStatus::Optimal && model.max_violation(&values) > opts.feasibility_tol {
                    return Err(MilpError::NumericalTrouble(format!(
                        "solution violates constraints by {:e}",
                        model.max_violation(&values)
                    )));
                }
            }
            if status == LpStatus::Optimal {
                let value = model.objective.as_ref().map_or(0.0, |o| o.eval(&values));
                if incumbent.as_ref().map_or(true, |(inc, _)| value > *inc + gap(*inc)) {
                    incumbent = Some((value, values));
                }
                continue;
            }
            // Rounding within tolerance broke feasibility: branch on the least integral binary.
            branch_var = binaries.iter().copied().find(|&b| node_x[b] != round_binary(node_x[b]));
            let Some(_) = branch_var else { continue };
        }
        let b = branch_var.expect("branch variable chosen");
        for value in [0.0, 1.0] {
            let mut fixes = (*node.fixes).clone();
            fixes.push((b, value));
            queue.push(Node { bound: obj, id: next_id, parent: node.id, fixes: Rc::new(fixes), snap: Some(snap.clone()) });
            next_id += 1;
        }
    }
    match (incumbent, limited) {
        (Some((objective, values)), None) => Ok(MilpSolution { status: Status::Optimal, values, objective, nodes }),
        (Some((objective, values)), Some(_)) => Ok(MilpSolution { status: Status::Feasible, values, objective, nodes }),
        (None, None) => Ok(MilpSolution::infeasible(nodes)),
        (None, Some(e)) => Err(e),
    }
}
