//! Memory structures, Mealy strategies, memory products and bounded-memory achievability.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::encode::{psma_check_detailed, EncodeError, PsmaOptions, PsmaVerdict};
use crate::exact::evaluate_query;
use crate::mdp::{Choice, Mdp, MdpError, Objective, Point, PureStationaryStrategy, Query, RewardStructure};

/// Default bound on the number of product states.
pub const MAX_PRODUCT_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemoryError {
    #[error("memory size must be at least 1")]
    ZeroMemory,
    #[error("memory state {0} has no successor")]
    EmptyUpdate(usize),
    #[error("memory structure refers to memory state {0} outside its range")]
    BadMemoryState(usize),
    #[error("goal memory supports at most 16 goal sets, got {0}")]
    TooManyGoals(usize),
    #[error("product exceeds {limit} states")]
    ProductTooLarge { limit: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Nondeterministic memory structure ⟨M, δ, m_I⟩ with M = {0, …, size−1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryStructure {
    pub size: usize,
    pub initial: usize,
    /// δ(m), non-empty for every m.
    pub update: Vec<BTreeSet<usize>>,
}

impl MemoryStructure {
    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.size == 0 {
            return Err(MemoryError::ZeroMemory);
        }
        if self.initial >= self.size {
            return Err(MemoryError::BadMemoryState(self.initial));
        }
        if self.update.len() != self.size {
            return Err(MemoryError::BadMemoryState(self.update.len()));
        }
        for (m, d) in self.update.iter().enumerate() {
            if d.is_empty() {
                return Err(MemoryError::EmptyUpdate(m));
            }
            if let Some(&x) = d.iter().find(|&&x| x >= self.size) {
                return Err(MemoryError::BadMemoryState(x));
            }
        }
        Ok(())
    }

    /// Whether δ(m) = M for every m.
    pub fn is_complete(&self) -> bool {
        self.update.iter().all(|d| d.len() == self.size)
    }
}

/// δ(m) = M.
pub fn build_complete_memory(k: usize) -> Result<MemoryStructure, MemoryError> {
    if k == 0 {
        return Err(MemoryError::ZeroMemory);
    }
    Ok(MemoryStructure { size: k, initial: 0, update: vec![(0..k).collect(); k] })
}

/// δ(m_i) = {m_i, m_{i+1}} for i < K, and the last state is absorbing.
pub fn build_counter_memory(k: usize) -> Result<MemoryStructure, MemoryError> {
    if k == 0 {
        return Err(MemoryError::ZeroMemory);
    }
    let update = (0..k).map(|i| if i + 1 < k { [i, i + 1].into_iter().collect() } else { [i].into_iter().collect() }).collect();
    Ok(MemoryStructure { size: k, initial: 0, update })
}

/// Memory kinds accepted by [`pbma_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryKind {
    Complete,
    Counter,
    /// One bit per objective with a goal set, recording goal visits.
    Goal,
}

/// A product MDP with the maps back to the original model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    pub mdp: Mdp,
    pub memory_size: usize,
    /// Product state → (state, memory).
    pub states: Vec<(usize, usize)>,
    /// Product action → (original action, next memory), indexed `[state][action]`.
    pub actions: Vec<Vec<(usize, usize)>>,
    /// Goal memory: goal bits of each original state. Memory m at s stands for the
    /// product state (s, m ∪ goals(s)).
    pub goal_masks: Option<Vec<usize>>,
}

impl Product {
    pub fn index(&self) -> BTreeMap<(usize, usize), usize> {
        self.states.iter().enumerate().map(|(i, &k)| (k, i)).collect()
    }
}

fn product_name(m: &Mdp, s: usize, mem: usize) -> alloc::string::String {
    format!("{}_m{}", m.name(s), mem)
}

/// Generic reachable product from (s_I, m_I) given per-(state, memory, action) successor
/// memories; `next_mem(s, mem, a, t)` yields the memory of the target state.
fn build_product(
    m: &Mdp,
    initial_mem: usize,
    limit: usize,
    mut options: impl FnMut(usize, usize, usize) -> Vec<usize>,
    target_mem: impl Fn(usize, usize) -> usize,
    label: impl Fn(&str, usize) -> alloc::string::String,
) -> Result<(Mdp, Vec<(usize, usize)>, Vec<Vec<(usize, usize)>>), MemoryError> {
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut states: Vec<(usize, usize)> = Vec::new();
    let start = (m.initial(), target_mem(m.initial(), initial_mem));
    index.insert(start, 0);
    states.push(start);
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    let mut actions: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (s, mem) = states[i];
        let mut cs = Vec::new();
        let mut acts = Vec::new();
        for a in 0..m.num_actions(s) {
            for next in options(s, mem, a) {
                let mut succ = Vec::with_capacity(m.succ(s, a).len());
                for (t, p) in m.succ(s, a) {
                    let key = (*t, target_mem(*t, next));
                    let idx = match index.get(&key) {
                        Some(&x) => x,
                        None => {
                            if states.len() >= limit {
                                return Err(MemoryError::ProductTooLarge { limit });
                            }
                            index.insert(key, states.len());
                            states.push(key);
                            states.len() - 1
                        }
                    };
                    succ.push((idx, p.clone()));
                }
                cs.push(Choice { label: label(&m.actions(s)[a].label, next), succ });
                acts.push((a, next));
            }
        }
        choices.push(cs);
        actions.push(acts);
        i += 1;
    }
    let names = states.iter().map(|&(s, mem)| product_name(m, s, mem)).collect();
    Ok((Mdp::new(names, choices, 0)?, states, actions))
}

/// M ⋉ N: states S × M reachable from (s_I, m_I), actions (α, m') with m' ∈ δ(m).
pub fn product(m: &Mdp, mem: &MemoryStructure) -> Result<Product, MemoryError> {
    product_with_limit(m, mem, MAX_PRODUCT_STATES)
}

pub fn product_with_limit(m: &Mdp, mem: &MemoryStructure, limit: usize) -> Result<Product, MemoryError> {
    mem.validate()?;
    let (mdp, states, actions) = build_product(
        m,
        mem.initial,
        limit,
        |_, x, _| mem.update[x].iter().copied().collect(),
        |_, x| x,
        |l, next| format!("{}_m{}", l, next),
    )?;
    Ok(Product { mdp, memory_size: mem.size, states, actions, goal_masks: None })
}

/// Goal bit per objective with a non-empty goal set.
fn goal_bits(q: &Query) -> Vec<Option<usize>> {
    let mut next = 0;
    q.objectives
        .iter()
        .map(|o| {
            (!o.goal.is_empty()).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Product with deterministic goal-visit tracking: memory m at s becomes m ∪ goals(s).
pub fn goal_product(m: &Mdp, q: &Query) -> Result<Product, MemoryError> {
    q.validate(m)?;
    let bits = goal_bits(q);
    let k = bits.iter().flatten().count();
    if k > 16 {
        return Err(MemoryError::TooManyGoals(k));
    }
    let masks: Vec<usize> = (0..m.num_states())
        .map(|s| {
            q.objectives.iter().zip(&bits).filter(|(o, _)| o.goal.contains(&s)).fold(0, |acc, (_, b)| acc | (1 << b.unwrap()))
        })
        .collect();
    let (mdp, states, actions) = build_product(
        m,
        0,
        MAX_PRODUCT_STATES,
        |_, x, _| vec![x],
        |t, x| x | masks[t],
        |l, _| alloc::string::String::from(l),
    )?;
    Ok(Product { mdp, memory_size: 1 << k, states, actions, goal_masks: Some(masks) })
}

/// Q' with G' = G × M (∅ stays ∅) and R'((s,m),(α,m'),(s',m')) = R(s,α,s').
pub fn lift_query(q: &Query, p: &Product) -> Query {
    let objectives = q
        .objectives
        .iter()
        .map(|o| {
            let goal: BTreeSet<usize> = (0..p.states.len()).filter(|&x| o.goal.contains(&p.states[x].0)).collect();
            let mut r = RewardStructure::new();
            for (x, acts) in p.actions.iter().enumerate() {
                let s = p.states[x].0;
                for (b, &(a, _)) in acts.iter().enumerate() {
                    for (y, _) in p.mdp.succ(x, b) {
                        let v = o.reward.get(s, a, p.states[*y].0);
                        if v != num_traits::Zero::zero() {
                            r.set(x, b, *y, v);
                        }
                    }
                }
            }
            Objective::new(r, o.relation, goal)
        })
        .collect();
    Query { objectives }
}

/// Pure strategy given by a Mealy machine ⟨M, σ_a, σ_u, m_I⟩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyStrategy {
    pub memory_size: usize,
    pub initial: usize,
    /// σ_a indexed `[state][memory]`.
    pub next_action: Vec<Vec<usize>>,
    /// σ_u indexed `[memory][state][action]`.
    pub update: Vec<Vec<Vec<usize>>>,
}

impl MealyStrategy {
    pub fn validate(&self, m: &Mdp) -> Result<(), MemoryError> {
        if self.memory_size == 0 {
            return Err(MemoryError::ZeroMemory);
        }
        if self.initial >= self.memory_size
            || self.next_action.len() != m.num_states()
            || self.update.len() != self.memory_size
        {
            return Err(MemoryError::BadMemoryState(self.initial));
        }
        for s in 0..m.num_states() {
            if self.next_action[s].len() != self.memory_size {
                return Err(MemoryError::BadMemoryState(self.next_action[s].len()));
            }
            for &a in &self.next_action[s] {
                if a >= m.num_actions(s) {
                    return Err(MdpError::InvalidStrategy(s).into());
                }
            }
        }
        for row in &self.update {
            if row.len() != m.num_states() {
                return Err(MemoryError::BadMemoryState(row.len()));
            }
            for (s, acts) in row.iter().enumerate() {
                if acts.len() != m.num_actions(s) {
                    return Err(MdpError::InvalidStrategy(s).into());
                }
                if let Some(&x) = acts.iter().find(|&&x| x >= self.memory_size) {
                    return Err(MemoryError::BadMemoryState(x));
                }
            }
        }
        Ok(())
    }

    /// A stationary strategy as a one-state machine.
    pub fn from_stationary(m: &Mdp, sigma: &PureStationaryStrategy) -> Self {
        MealyStrategy {
            memory_size: 1,
            initial: 0,
            next_action: sigma.choice.iter().map(|&a| vec![a]).collect(),
            update: vec![(0..m.num_states()).map(|s| vec![0; m.num_actions(s)]).collect()],
        }
    }
}

/// Mealy machine for a pure stationary strategy on a product.
///
/// σ'(s,m) = (α, m') gives σ_a(s,m) = α, σ_u(m,s,α) = m' and σ_u(m,s,α') = m for other
/// α'. Pairs (s,m) absent from the product get the lowest action index.
pub fn to_mealy(m: &Mdp, p: &Product, sigma: &PureStationaryStrategy) -> MealyStrategy {
    let k = p.memory_size;
    let n = m.num_states();
    let mut next_action = vec![vec![0; k]; n];
    let mut update: Vec<Vec<Vec<usize>>> =
        (0..k).map(|mem| (0..n).map(|s| vec![mem; m.num_actions(s)]).collect()).collect();
    if let Some(masks) = &p.goal_masks {
        let index = p.index();
        for s in 0..n {
            for mem in 0..k {
                let full = mem | masks[s];
                update[mem][s].iter_mut().for_each(|x| *x = full);
                if let Some(&x) = index.get(&(s, full)) {
                    next_action[s][mem] = p.actions[x][sigma.choice[x]].0;
                }
            }
        }
        return MealyStrategy { memory_size: k, initial: 0, next_action, update };
    }
    for (x, &(s, mem)) in p.states.iter().enumerate() {
        let (a, next) = p.actions[x][sigma.choice[x]];
        next_action[s][mem] = a;
        update[mem][s][a] = next;
    }
    MealyStrategy { memory_size: k, initial: 0, next_action, update }
}

/// Pairs (s, m) outside the product; [`to_mealy`] fills them with the lowest action.
pub fn completed_pairs(m: &Mdp, p: &Product) -> Vec<(usize, usize)> {
    let index = p.index();
    (0..m.num_states())
        .flat_map(|s| (0..p.memory_size).map(move |mem| (s, mem)))
        .filter(|&(s, mem)| {
            let full = p.goal_masks.as_ref().map_or(mem, |masks| mem | masks[s]);
            !index.contains_key(&(s, full))
        })
        .collect()
}

/// Exact values of a Mealy strategy, computed on the chain over S × M it induces.
pub fn evaluate_mealy(m: &Mdp, sigma: &MealyStrategy, q: &Query) -> Result<Point, MemoryError> {
    sigma.validate(m)?;
    q.validate(m)?;
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut states = vec![(m.initial(), sigma.initial)];
    index.insert(states[0], 0);
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let (s, mem) = states[i];
        let a = sigma.next_action[s][mem];
        let next = sigma.update[mem][s][a];
        let mut succ = Vec::new();
        for (t, p) in m.succ(s, a) {
            let key = (*t, next);
            let idx = *index.entry(key).or_insert_with(|| {
                states.push(key);
                states.len() - 1
            });
            succ.push((idx, p.clone()));
        }
        choices.push(vec![Choice { label: m.actions(s)[a].label.clone(), succ }]);
        i += 1;
    }
    let names = states.iter().map(|&(s, mem)| product_name(m, s, mem)).collect();
    let chain = Mdp::new(names, choices, 0)?;
    let objectives = q
        .objectives
        .iter()
        .map(|o| {
            let goal: BTreeSet<usize> = (0..states.len()).filter(|&x| o.goal.contains(&states[x].0)).collect();
            let mut r = RewardStructure::new();
            for x in 0..states.len() {
                let (s, mem) = states[x];
                let a = sigma.next_action[s][mem];
                for (y, _) in chain.succ(x, 0) {
                    let v = o.reward.get(s, a, states[*y].0);
                    if v != num_traits::Zero::zero() {
                        r.set(x, 0, *y, v);
                    }
                }
            }
            Objective::new(r, o.relation, goal)
        })
        .collect();
    let lifted = Query { objectives };
    Ok(evaluate_query(&chain, &PureStationaryStrategy::first(&chain), &lifted)?)
}

/// Bounded-memory verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PbmaVerdict {
    Achievable(MealyStrategy),
    /// No K-memory strategy achieves the point.
    NotAchievable,
    /// No strategy expressible in the restricted memory structure achieves the point;
    /// other K-memory strategies may.
    LowerBoundOnly,
    /// The product witness failed the exact check on the original model.
    VerificationFailed(MealyStrategy),
}

impl PbmaVerdict {
    pub fn is_achievable(&self) -> bool {
        matches!(self, PbmaVerdict::Achievable(_))
    }
}

#[derive(Debug, Clone)]
pub struct PbmaReport {
    pub verdict: PbmaVerdict,
    pub product_states: usize,
    pub product_actions: usize,
    /// Details of the stationary check on the product.
    pub psma: crate::encode::PsmaReport,
}

/// Memory structure product for `kind`; `k` is ignored for goal memory.
pub fn memory_product(m: &Mdp, q: &Query, k: usize, kind: MemoryKind) -> Result<Product, MemoryError> {
    match kind {
        MemoryKind::Complete => product(m, &build_complete_memory(k)?),
        MemoryKind::Counter => product(m, &build_counter_memory(k)?),
        MemoryKind::Goal => goal_product(m, q),
    }
}

/// Decides p ∈ Ach^P_K(M, Q) through the stationary check on the product. Exact for
/// complete memory; a sound under-approximation otherwise.
pub fn pbma_check(
    m: &Mdp,
    q: &Query,
    k: usize,
    p: &Point,
    kind: MemoryKind,
    opts: &PsmaOptions,
) -> Result<PbmaReport, MemoryError> {
    q.validate(m)?;
    let prod = memory_product(m, q, k, kind)?;
    let lifted = lift_query(q, &prod);
    let report = psma_check_detailed(&prod.mdp, &lifted, p, opts)?;
    let verdict = match &report.verdict {
        PsmaVerdict::Achievable(sigma) => {
            let mealy = to_mealy(m, &prod, sigma);
            let values = evaluate_mealy(m, &mealy, q)?;
            if q.objectives.iter().zip(values.0.iter().zip(&p.0)).all(|(o, (v, t))| o.relation.holds(v, t)) {
                PbmaVerdict::Achievable(mealy)
            } else {
                PbmaVerdict::VerificationFailed(mealy)
            }
        }
        PsmaVerdict::VerificationFailed(sigma) => PbmaVerdict::VerificationFailed(to_mealy(m, &prod, sigma)),
        PsmaVerdict::NotAchievable if kind == MemoryKind::Complete => PbmaVerdict::NotAchievable,
        PsmaVerdict::NotAchievable => PbmaVerdict::LowerBoundOnly,
    };
    Ok(PbmaReport {
        verdict,
        product_states: prod.mdp.num_states(),
        product_actions: prod.mdp.num_pairs(),
        psma: report,
    })
}

#[cfg(test)]
mod tests;
