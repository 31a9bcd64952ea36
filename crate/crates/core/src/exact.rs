//! Exact evaluation of pure stationary strategies and the brute-force oracle.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::graph::sccs;
use crate::linalg;
use crate::mdp::{dominates, InducedChain, Mdp, MdpError, Objective, Point, PureStationaryStrategy, Query};
use crate::rational::{ExtRational, Q};

/// Default cap on the number of enumerated strategies.
pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("the value system is singular")]
    SingularSystem,
    #[error("{count} strategies exceed the enumeration cap {cap}")]
    TooManyStrategies { count: u128, cap: u128 },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Solves x_s = Σ P(s,σ(s),s')·(x_{s'} + R(s,σ(s),s')) with x_s = 0 on `zero`.
pub fn solve_value_system(chain: &InducedChain, obj: &Objective, zero: &BTreeSet<usize>) -> Result<Vec<Q>, ExactError> {
    let m = &chain.mdp;
    let o = chain.objective(obj);
    let n = m.num_states();
    let free: Vec<usize> = (0..n).filter(|s| !zero.contains(s)).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in free.iter().enumerate() {
        pos[s] = i;
    }
    let k = free.len();
    let mut a = vec![vec![Q::zero(); k]; k];
    let mut b = vec![Q::zero(); k];
    for (i, &s) in free.iter().enumerate() {
        a[i][i] += Q::one();
        for (t, p) in m.succ(s, 0) {
            if pos[*t] != usize::MAX {
                a[i][pos[*t]] -= p;
            }
        }
        b[i] = o.reward.expected(m, s, 0);
    }
    let x = linalg::solve(&a, &b).ok_or(ExactError::SingularSystem)?;
    let mut out = vec![Q::zero(); n];
    for (i, &s) in free.iter().enumerate() {
        out[s] = x[i].clone();
    }
    Ok(out)
}

/// Exact value E^σ(R ◊ G) from every state.
pub fn evaluate_all(m: &Mdp, sigma: &PureStationaryStrategy, obj: &Objective) -> Result<Vec<ExtRational>, MdpError> {
    sigma.validate(m)?;
    let n = m.num_states();
    let goal = |s: usize| obj.goal.contains(&s);
    let adj: Vec<Vec<usize>> =
        (0..n).map(|s| if goal(s) { Vec::new() } else { m.succ(s, sigma.choice[s]).iter().map(|(t, _)| *t).collect() }).collect();
    let mut bottom = vec![false; n];
    let mut positive = vec![false; n];
    for c in sccs(&adj) {
        if goal(c[0]) {
            continue;
        }
        let set: BTreeSet<usize> = c.iter().copied().collect();
        if c.iter().all(|&s| adj[s].iter().all(|t| set.contains(t))) {
            let pos = c.iter().any(|&s| obj.reward.pair_positive(s, sigma.choice[s]));
            for &s in &c {
                bottom[s] = true;
                positive[s] = pos;
            }
        }
    }
    // States reaching a positive bottom component before the goal have infinite value.
    let mut inf = positive.clone();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !inf[s] && adj[s].iter().any(|&t| inf[t]) {
                inf[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let zero: BTreeSet<usize> = (0..n).filter(|&s| goal(s) || bottom[s] || inf[s]).collect();
    let chain = crate::mdp::induce_chain(m, sigma)?;
    let x = solve_value_system(&chain, obj, &zero).expect("transient states reach the goal or a bottom component");
    Ok((0..n).map(|s| if inf[s] { ExtRational::Infinite } else { ExtRational::Finite(x[s].clone()) }).collect())
}

/// Exact value of σ at the initial state.
pub fn evaluate_strategy(m: &Mdp, sigma: &PureStationaryStrategy, obj: &Objective) -> Result<ExtRational, MdpError> {
    Ok(evaluate_all(m, sigma, obj)?.swap_remove(m.initial()))
}

/// Value vector of σ for every objective of `q`.
pub fn evaluate_query(m: &Mdp, sigma: &PureStationaryStrategy, q: &Query) -> Result<Point, MdpError> {
    q.objectives.iter().map(|o| evaluate_strategy(m, sigma, o)).collect::<Result<Vec<_>, _>>().map(Point)
}

/// ⟨M, σ, p⟩ ⊨ Q with exact comparison.
pub fn check_achieves(m: &Mdp, sigma: &PureStationaryStrategy, q: &Query, p: &Point) -> Result<bool, MdpError> {
    if p.dim() != q.dim() {
        return Err(MdpError::DimensionMismatch { expected: q.dim(), got: p.dim() });
    }
    let v = evaluate_query(m, sigma, q)?;
    dominates(q, &v, p)
}

/// The strategy with enumeration index `idx` (state 0 least significant).
pub fn strategy_from_index(m: &Mdp, mut idx: u128) -> Option<PureStationaryStrategy> {
    let mut choice = Vec::with_capacity(m.num_states());
    for s in 0..m.num_states() {
        let k = m.num_actions(s) as u128;
        choice.push((idx % k) as usize);
        idx /= k;
    }
    (idx == 0).then_some(PureStationaryStrategy { choice })
}

fn check_cap(m: &Mdp, cap: u128) -> Result<u128, ExactError> {
    let count = m.num_strategies();
    if count > cap {
        return Err(ExactError::TooManyStrategies { count, cap });
    }
    Ok(count)
}

/// Value vectors of the strategies with indices in `range`, in enumeration order.
pub fn enumerate_values(
    m: &Mdp,
    q: &Query,
    range: core::ops::Range<u128>,
) -> Result<Vec<(Point, PureStationaryStrategy)>, ExactError> {
    let mut out = Vec::new();
    let Some(mut sigma) = strategy_from_index(m, range.start) else { return Ok(out) };
    for _ in range {
        out.push((evaluate_query(m, &sigma, q)?, sigma.clone()));
        if !sigma.advance(m) {
            break;
        }
    }
    Ok(out)
}

/// First strategy in `range` achieving `p`.
pub fn find_achieving(
    m: &Mdp,
    q: &Query,
    p: &Point,
    range: core::ops::Range<u128>,
) -> Result<Option<PureStationaryStrategy>, ExactError> {
    let Some(mut sigma) = strategy_from_index(m, range.start) else { return Ok(None) };
    for _ in range {
        if check_achieves(m, &sigma, q, p)? {
            return Ok(Some(sigma));
        }
        if !sigma.advance(m) {
            break;
        }
    }
    Ok(None)
}

/// Witness of `p` over all pure stationary strategies, if any.
pub fn brute_force_achievable(m: &Mdp, q: &Query, p: &Point, cap: u128) -> Result<Option<PureStationaryStrategy>, ExactError> {
    let count = check_cap(m, cap)?;
    find_achieving(m, q, p, 0..count)
}

/// Keeps the non-dominated value vectors, first witness per distinct vector; sorted by point.
pub fn pareto_filter(q: &Query, values: Vec<(Point, PureStationaryStrategy)>) -> Vec<(Point, PureStationaryStrategy)> {
    let mut uniq: Vec<(Point, PureStationaryStrategy)> = Vec::new();
    for (p, s) in values {
        if !uniq.iter().any(|(u, _)| *u == p) {
            uniq.push((p, s));
        }
    }
    let mut out: Vec<(Point, PureStationaryStrategy)> = uniq
        .iter()
        .filter(|(p, _)| !uniq.iter().any(|(o, _)| o != p && dominates(q, o, p).unwrap_or(false)))
        .cloned()
        .collect();
    out.sort_by(|a, b| a.0 .0.cmp(&b.0 .0));
    out
}

/// Exact pure stationary Pareto front with one witness per point.
pub fn brute_force_pareto(m: &Mdp, q: &Query, cap: u128) -> Result<Vec<(Point, PureStationaryStrategy)>, ExactError> {
    let count = check_cap(m, cap)?;
    Ok(pareto_filter(q, enumerate_values(m, q, 0..count)?))
}
