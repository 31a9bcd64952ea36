//! MDPs, reward structures, objectives, queries, strategies and induced chains.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::rational::{ExtRational, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MdpError {
    #[error("model has no states")]
    NoStates,
    #[error("state {0} has no enabled action")]
    NoActions(usize),
    #[error("state {0} enables action {1:?} twice")]
    DuplicateAction(usize, String),
    #[error("probability of ({0}, {1}) to {2} is outside (0, 1]")]
    BadProbability(usize, usize, usize),
    #[error("probabilities of ({0}, {1}) do not sum to 1")]
    NotDistribution(usize, usize),
    #[error("successor {0} does not exist")]
    UnknownState(usize),
    #[error("pair set is not closed")]
    NotClosed,
    #[error("start state is not covered by the pair set")]
    StartOutside,
    #[error("strategy chooses a disabled action at state {0}")]
    InvalidStrategy(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reward on ({0}, {1}, {2}) is negative or refers to a missing transition")]
    BadReward(usize, usize, usize),
    #[error("a query needs at least one objective")]
    EmptyQuery,
}

/// One enabled action: label and sorted successor distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub label: String,
    pub succ: Vec<(usize, Q)>,
}

/// Finite MDP with exact transition probabilities.
///
/// Actions are addressed by their index in the state's choice list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdp {
    names: Vec<String>,
    choices: Vec<Vec<Choice>>,
    initial: usize,
}

impl Mdp {
    /// Validates and builds an MDP. Successor lists are merged and sorted.
    pub fn new(names: Vec<String>, choices: Vec<Vec<Choice>>, initial: usize) -> Result<Self, MdpError> {
        let n = names.len();
        if n == 0 {
            return Err(MdpError::NoStates);
        }
        if initial >= n {
            return Err(MdpError::UnknownState(initial));
        }
        if choices.len() != n {
            return Err(MdpError::DimensionMismatch { expected: n, got: choices.len() });
        }
        let mut normalized = Vec::with_capacity(n);
        for (s, acts) in choices.into_iter().enumerate() {
            if acts.is_empty() {
                return Err(MdpError::NoActions(s));
            }
            let mut labels = BTreeSet::new();
            let mut out = Vec::with_capacity(acts.len());
            for (a, c) in acts.into_iter().enumerate() {
                if !labels.insert(c.label.clone()) {
                    return Err(MdpError::DuplicateAction(s, c.label));
                }
                let mut merged: BTreeMap<usize, Q> = BTreeMap::new();
                for (t, p) in c.succ {
                    if t >= n {
                        return Err(MdpError::UnknownState(t));
                    }
                    *merged.entry(t).or_insert_with(Q::zero) += p;
                }
                let mut total = Q::zero();
                for (&t, p) in &merged {
                    if !p.is_positive() || *p > Q::one() {
                        return Err(MdpError::BadProbability(s, a, t));
                    }
                    total += p;
                }
                if !total.is_one() {
                    return Err(MdpError::NotDistribution(s, a));
                }
                out.push(Choice { label: c.label, succ: merged.into_iter().collect() });
            }
            normalized.push(out);
        }
        Ok(Mdp { names, choices: normalized, initial })
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn actions(&self, s: usize) -> &[Choice] {
        &self.choices[s]
    }

    pub fn num_actions(&self, s: usize) -> usize {
        self.choices[s].len()
    }

    pub fn action_index(&self, s: usize, label: &str) -> Option<usize> {
        self.choices[s].iter().position(|c| c.label == label)
    }

    pub fn succ(&self, s: usize, a: usize) -> &[(usize, Q)] {
        &self.choices[s][a].succ
    }

    /// P(s, a, t), zero when absent.
    pub fn prob(&self, s: usize, a: usize, t: usize) -> Q {
        let succ = &self.choices[s][a].succ;
        match succ.binary_search_by_key(&t, |(u, _)| *u) {
            Ok(i) => succ[i].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn num_pairs(&self) -> usize {
        self.choices.iter().map(Vec::len).sum()
    }

    /// All (state, action) pairs in index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_states()).flat_map(move |s| (0..self.num_actions(s)).map(move |a| (s, a)))
    }

    /// Predecessor pairs with probabilities, indexed by target state.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize, Q)>> {
        let mut pred = alloc::vec![Vec::new(); self.num_states()];
        for (s, a) in self.pairs() {
            for (t, p) in self.succ(s, a) {
                pred[*t].push((s, a, p.clone()));
            }
        }
        pred
    }

    pub fn is_markov_chain(&self) -> bool {
        self.choices.iter().all(|c| c.len() == 1)
    }

    /// Same model with another initial state.
    pub fn with_initial(&self, s: usize) -> Mdp {
        Mdp { names: self.names.clone(), choices: self.choices.clone(), initial: s }
    }

    /// Number of pure stationary strategies, saturating at `u128::MAX`.
    pub fn num_strategies(&self) -> u128 {
        self.choices.iter().fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    /// States reachable from `starts` using pairs accepted by `allowed`.
    pub fn reachable(&self, starts: &[usize], allowed: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut seen = alloc::vec![false; self.num_states()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in starts {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(s) = stack.pop() {
            for a in 0..self.num_actions(s) {
                if !allowed(s, a) {
                    continue;
                }
                for (t, _) in self.succ(s, a) {
                    if !seen[*t] {
                        seen[*t] = true;
                        stack.push(*t);
                    }
                }
            }
        }
        seen
    }
}

/// Incremental construction of an [`Mdp`] by state names.
#[derive(Debug, Default, Clone)]
pub struct MdpBuilder {
    names: Vec<String>,
    choices: Vec<Vec<Choice>>,
}

impl MdpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `name`, creating the state if needed.
    pub fn state(&mut self, name: &str) -> usize {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return i;
        }
        self.names.push(String::from(name));
        self.choices.push(Vec::new());
        self.names.len() - 1
    }

    pub fn action(&mut self, s: usize, label: &str, succ: impl IntoIterator<Item = (usize, Q)>) -> usize {
        self.choices[s].push(Choice { label: String::from(label), succ: succ.into_iter().collect() });
        self.choices[s].len() - 1
    }

    pub fn build(self, initial: usize) -> Result<Mdp, MdpError> {
        Mdp::new(self.names, self.choices, initial)
    }
}

/// Sparse non-negative transition rewards keyed by (state, action, successor).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewardStructure {
    entries: BTreeMap<(usize, usize, usize), Q>,
}

impl RewardStructure {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `v`; zero values are dropped.
    pub fn set(&mut self, s: usize, a: usize, t: usize, v: Q) {
        if v.is_zero() {
            self.entries.remove(&(s, a, t));
        } else {
            self.entries.insert((s, a, t), v);
        }
    }

    pub fn get(&self, s: usize, a: usize, t: usize) -> Q {
        self.entries.get(&(s, a, t)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Q)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Σ_t P(s,a,t)·R(s,a,t).
    pub fn expected(&self, m: &Mdp, s: usize, a: usize) -> Q {
        let mut r = Q::zero();
        for (t, p) in m.succ(s, a) {
            if let Some(v) = self.entries.get(&(s, a, *t)) {
                r += p * v;
            }
        }
        r
    }

    /// True iff some successor of (s, a) carries a positive reward.
    pub fn pair_positive(&self, s: usize, a: usize) -> bool {
        self.entries.range((s, a, 0)..=(s, a, usize::MAX)).next().is_some()
    }

    /// Checks non-negativity and that every key is a transition of `m`.
    pub fn validate(&self, m: &Mdp) -> Result<(), MdpError> {
        for (&(s, a, t), v) in &self.entries {
            if s >= m.num_states() || a >= m.num_actions(s) || m.prob(s, a, t).is_zero() || v.is_negative() {
                return Err(MdpError::BadReward(s, a, t));
            }
        }
        Ok(())
    }

    /// Maps entries through a pair/state renaming, dropping unmapped ones.
    pub fn remap(&self, f: impl Fn(usize, usize, usize) -> Option<(usize, usize, usize)>) -> RewardStructure {
        let mut out = RewardStructure::new();
        for (&(s, a, t), v) in &self.entries {
            if let Some(k) = f(s, a, t) {
                out.entries.insert(k, v.clone());
            }
        }
        out
    }
}

/// Threshold relation of an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    /// Maximizing: value ≥ threshold.
    AtLeast,
    /// Minimizing: value ≤ threshold.
    AtMost,
}

impl Relation {
    /// Whether `value` meets `threshold` under this relation.
    pub fn holds(self, value: &ExtRational, threshold: &ExtRational) -> bool {
        match self {
            Relation::AtLeast => value >= threshold,
            Relation::AtMost => value <= threshold,
        }
    }
}

/// Expected reward accumulated until the first visit of `goal` (total reward if empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub reward: RewardStructure,
    pub relation: Relation,
    pub goal: BTreeSet<usize>,
}

impl Objective {
    pub fn new(reward: RewardStructure, relation: Relation, goal: BTreeSet<usize>) -> Self {
        Objective { reward, relation, goal }
    }

    pub fn is_max(&self) -> bool {
        self.relation == Relation::AtLeast
    }

    pub fn is_total(&self) -> bool {
        self.goal.is_empty()
    }

    pub fn with_relation(mut self, relation: Relation) -> Self {
        self.relation = relation;
        self
    }
}

/// Ordered tuple of objectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub objectives: Vec<Objective>,
}

impl Query {
    pub fn new(objectives: Vec<Objective>) -> Result<Self, MdpError> {
        if objectives.is_empty() {
            return Err(MdpError::EmptyQuery);
        }
        Ok(Query { objectives })
    }

    pub fn dim(&self) -> usize {
        self.objectives.len()
    }

    pub fn validate(&self, m: &Mdp) -> Result<(), MdpError> {
        for o in &self.objectives {
            o.reward.validate(m)?;
            if let Some(&g) = o.goal.iter().find(|&&g| g >= m.num_states()) {
                return Err(MdpError::UnknownState(g));
            }
        }
        Ok(())
    }
}

/// Threshold vector, one extended rational per objective.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point(pub Vec<ExtRational>);

impl Point {
    pub fn finite(coords: impl IntoIterator<Item = Q>) -> Self {
        Point(coords.into_iter().map(ExtRational::Finite).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(ExtRational::is_finite)
    }
}

/// True iff `p2` lies in the closure of `{p}` for query `q`.
pub fn dominates(q: &Query, p: &Point, p2: &Point) -> Result<bool, MdpError> {
    for pt in [p, p2] {
        if pt.dim() != q.dim() {
            return Err(MdpError::DimensionMismatch { expected: q.dim(), got: pt.dim() });
        }
    }
    Ok(q.objectives.iter().zip(p.0.iter().zip(&p2.0)).all(|(o, (a, b))| o.relation.holds(a, b)))
}

/// Objective R^G with R^G(s,α,s') = [s' ∈ G]; maximizing by default.
pub fn reachability_to_reward(m: &Mdp, goal: &BTreeSet<usize>) -> Objective {
    let mut r = RewardStructure::new();
    for (s, a) in m.pairs() {
        for (t, _) in m.succ(s, a) {
            if goal.contains(t) {
                r.set(s, a, *t, Q::one());
            }
        }
    }
    Objective::new(r, Relation::AtLeast, goal.clone())
}

/// Deterministic memoryless strategy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PureStationaryStrategy {
    pub choice: Vec<usize>,
}

impl PureStationaryStrategy {
    pub fn new(choice: Vec<usize>) -> Self {
        PureStationaryStrategy { choice }
    }

    /// Picks the first action everywhere.
    pub fn first(m: &Mdp) -> Self {
        PureStationaryStrategy { choice: alloc::vec![0; m.num_states()] }
    }

    pub fn validate(&self, m: &Mdp) -> Result<(), MdpError> {
        if self.choice.len() != m.num_states() {
            return Err(MdpError::DimensionMismatch { expected: m.num_states(), got: self.choice.len() });
        }
        match (0..m.num_states()).find(|&s| self.choice[s] >= m.num_actions(s)) {
            Some(s) => Err(MdpError::InvalidStrategy(s)),
            None => Ok(()),
        }
    }

    /// Labels of the chosen actions.
    pub fn labels<'a>(&self, m: &'a Mdp) -> Vec<&'a str> {
        self.choice.iter().enumerate().map(|(s, &a)| m.actions(s)[a].label.as_str()).collect()
    }

    /// Advances to the next strategy in lexicographic order (state 0 least significant).
    pub fn advance(&mut self, m: &Mdp) -> bool {
        for s in 0..self.choice.len() {
            self.choice[s] += 1;
            if self.choice[s] < m.num_actions(s) {
                return true;
            }
            self.choice[s] = 0;
        }
        false
    }
}

/// Sub-MDP with the maps back to the original model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubMdp {
    pub mdp: Mdp,
    /// New state index → original state index.
    pub state_map: Vec<usize>,
    /// New (state, action) → original action index.
    pub action_map: Vec<Vec<usize>>,
}

impl SubMdp {
    /// Original → new state index.
    pub fn inverse(&self, original_states: usize) -> Vec<Option<usize>> {
        let mut inv = alloc::vec![None; original_states];
        for (i, &s) in self.state_map.iter().enumerate() {
            inv[s] = Some(i);
        }
        inv
    }

    /// The objective restricted and renamed to this sub-MDP.
    pub fn objective(&self, o: &Objective, original_states: usize) -> Objective {
        let inv = self.inverse(original_states);
        let mut act_inv: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, acts) in self.action_map.iter().enumerate() {
            for (j, &a) in acts.iter().enumerate() {
                act_inv.insert((self.state_map[i], a), j);
            }
        }
        let reward = o.reward.remap(|s, a, t| {
            let ns = inv[s]?;
            let na = *act_inv.get(&(s, a))?;
            let nt = inv[t]?;
            Some((ns, na, nt))
        });
        let goal = o.goal.iter().filter_map(|&g| inv[g]).collect();
        Objective::new(reward, o.relation, goal)
    }

    pub fn query(&self, q: &Query, original_states: usize) -> Query {
        Query { objectives: q.objectives.iter().map(|o| self.objective(o, original_states)).collect() }
    }

    /// Lifts a strategy of the sub-MDP to the original model; uncovered states take action 0.
    pub fn lift_strategy(&self, sigma: &PureStationaryStrategy, original_states: usize) -> PureStationaryStrategy {
        let mut choice = alloc::vec![0; original_states];
        for (i, &s) in self.state_map.iter().enumerate() {
            choice[s] = self.action_map[i][sigma.choice[i]];
        }
        PureStationaryStrategy { choice }
    }
}

/// Whether `pairs` is closed for `m`.
pub fn is_closed(m: &Mdp, pairs: &BTreeSet<(usize, usize)>) -> bool {
    let states: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
    pairs.iter().all(|&(s, a)| {
        s < m.num_states() && a < m.num_actions(s) && m.succ(s, a).iter().all(|(t, _)| states.contains(t))
    })
}

/// M↓(E, s): keeps the states covered by `pairs` and exactly the listed actions.
pub fn sub_mdp(m: &Mdp, pairs: &BTreeSet<(usize, usize)>, start: usize) -> Result<SubMdp, MdpError> {
    if !is_closed(m, pairs) {
        return Err(MdpError::NotClosed);
    }
    let states: Vec<usize> = pairs.iter().map(|p| p.0).collect::<BTreeSet<_>>().into_iter().collect();
    let mut inv = alloc::vec![usize::MAX; m.num_states()];
    for (i, &s) in states.iter().enumerate() {
        inv[s] = i;
    }
    if start >= m.num_states() || inv[start] == usize::MAX {
        return Err(MdpError::StartOutside);
    }
    let mut choices = Vec::with_capacity(states.len());
    let mut action_map = Vec::with_capacity(states.len());
    for &s in &states {
        let mut cs = Vec::new();
        let mut am = Vec::new();
        for &(_, a) in pairs.range((s, 0)..=(s, usize::MAX)) {
            let c = &m.actions(s)[a];
            cs.push(Choice { label: c.label.clone(), succ: c.succ.iter().map(|(t, p)| (inv[*t], p.clone())).collect() });
            am.push(a);
        }
        choices.push(cs);
        action_map.push(am);
    }
    let names = states.iter().map(|&s| String::from(m.name(s))).collect();
    let mdp = Mdp::new(names, choices, inv[start])?;
    Ok(SubMdp { mdp, state_map: states, action_map })
}

/// Restriction of `m` to the states reachable from its initial state (all actions kept).
pub fn reachable_part(m: &Mdp) -> SubMdp {
    let seen = m.reachable(&[m.initial()], |_, _| true);
    let pairs: BTreeSet<(usize, usize)> = m.pairs().filter(|&(s, _)| seen[s]).collect();
    sub_mdp(m, &pairs, m.initial()).expect("reachable part is closed")
}

/// The induced Markov chain M^σ: same states, each keeping only σ(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedChain {
    pub mdp: Mdp,
    pub strategy: PureStationaryStrategy,
}

impl InducedChain {
    /// Objective rewards re-keyed to the chain (action index 0).
    pub fn objective(&self, o: &Objective) -> Objective {
        let sigma = &self.strategy;
        let reward = o.reward.remap(|s, a, t| (sigma.choice[s] == a).then_some((s, 0, t)));
        Objective::new(reward, o.relation, o.goal.clone())
    }
}

pub fn induce_chain(m: &Mdp, sigma: &PureStationaryStrategy) -> Result<InducedChain, MdpError> {
    sigma.validate(m)?;
    let pairs: BTreeSet<(usize, usize)> = sigma.choice.iter().enumerate().map(|(s, &a)| (s, a)).collect();
    let sub = sub_mdp(m, &pairs, m.initial())?;
    Ok(InducedChain { mdp: sub.mdp, strategy: sigma.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::builtin;
    use crate::rational::{q, qi};

    fn two_states() -> Mdp {
        let mut b = MdpBuilder::new();
        let s0 = b.state("s0");
        let s1 = b.state("s1");
        b.action(s0, "a", [(s1, q(1, 2)), (s0, q(1, 2))]);
        b.action(s1, "loop", [(s1, qi(1))]);
        b.build(s0).unwrap()
    }

    #[test]
    fn rejects_invalid_models() {
        let mut b = MdpBuilder::new();
        let s0 = b.state("s0");
        b.action(s0, "a", [(s0, q(1, 2))]);
        assert_eq!(b.build(0), Err(MdpError::NotDistribution(0, 0)));
        let mut b = MdpBuilder::new();
        b.state("s0");
        assert_eq!(b.build(0), Err(MdpError::NoActions(0)));
        let mut b = MdpBuilder::new();
        let s0 = b.state("s0");
        b.action(s0, "a", [(3, qi(1))]);
        assert_eq!(b.build(0), Err(MdpError::UnknownState(3)));
    }

    #[test]
    fn successors_are_merged_and_sorted() {
        let mut b = MdpBuilder::new();
        let s0 = b.state("s0");
        let s1 = b.state("s1");
        b.action(s0, "a", [(s1, q(1, 4)), (s0, q(1, 2)), (s1, q(1, 4))]);
        b.action(s1, "a", [(s1, qi(1))]);
        let m = b.build(0).unwrap();
        assert_eq!(m.succ(0, 0), &[(0, q(1, 2)), (1, q(1, 2))]);
        assert_eq!(m.prob(0, 0, 1), q(1, 2));
        assert_eq!(m.prob(1, 0, 0), qi(0));
    }

    #[test]
    fn sub_mdp_identity() {
        let m = two_states();
        let all: BTreeSet<_> = m.pairs().collect();
        let sub = sub_mdp(&m, &all, m.initial()).unwrap();
        assert_eq!(sub.mdp, m);
    }

    #[test]
    fn sub_mdp_fig5a_keeps_alpha_self_loop() {
        let (m, _) = builtin("fig5a").unwrap();
        let s0 = m.state_index("s0").unwrap();
        let s1 = m.state_index("s1").unwrap();
        let alpha = m.action_index(s0, "alpha").unwrap();
        let pairs: BTreeSet<_> = [(s0, alpha), (s1, 0)].into_iter().collect();
        let sub = sub_mdp(&m, &pairs, s0).unwrap();
        assert_eq!(sub.mdp.num_states(), 2);
        assert!(sub.mdp.is_markov_chain());
        let ns0 = sub.inverse(2)[s0].unwrap();
        assert_eq!(sub.mdp.succ(ns0, 0), &[(ns0, qi(1))]);
    }

    #[test]
    fn sub_mdp_rejects_open_sets() {
        let m = two_states();
        let pairs: BTreeSet<_> = [(0, 0)].into_iter().collect();
        assert_eq!(sub_mdp(&m, &pairs, 0), Err(MdpError::NotClosed));
        let pairs: BTreeSet<_> = [(1, 0)].into_iter().collect();
        assert_eq!(sub_mdp(&m, &pairs, 0), Err(MdpError::StartOutside));
    }

    #[test]
    fn induce_chain_on_chain_is_identity() {
        let m = two_states();
        let c = induce_chain(&m, &PureStationaryStrategy::first(&m)).unwrap();
        assert_eq!(c.mdp, m);
    }

    #[test]
    fn induce_chain_fig5a_beta() {
        let (m, _) = builtin("fig5a").unwrap();
        let s0 = m.state_index("s0").unwrap();
        let s1 = m.state_index("s1").unwrap();
        let beta = m.action_index(s0, "beta").unwrap();
        let mut sigma = PureStationaryStrategy::first(&m);
        sigma.choice[s0] = beta;
        let c = induce_chain(&m, &sigma).unwrap();
        assert_eq!(c.mdp.succ(s0, 0), &[(s1, qi(1))]);
        assert_eq!(c.mdp.succ(s1, 0), &[(s1, qi(1))]);
        assert!(induce_chain(&m, &PureStationaryStrategy::new(alloc::vec![5, 0])).is_err());
    }

    #[test]
    fn induce_chain_fig1a_beta() {
        let (m, _) = builtin("fig1").unwrap();
        let s = |n: &str| m.state_index(n).unwrap();
        let mut sigma = PureStationaryStrategy::first(&m);
        sigma.choice[s("s1")] = m.action_index(s("s1"), "beta").unwrap();
        let c = induce_chain(&m, &sigma).unwrap();
        assert_eq!(c.mdp.succ(s("s1"), 0), &[(s("s4"), q(7, 10)), (s("s5"), q(3, 10))]);
        assert_eq!(c.mdp.succ(s("s4"), 0), &[(s("s3"), qi(1))]);
    }

    #[test]
    fn reachability_reward_structure() {
        let (m, _) = builtin("fig1").unwrap();
        let goal: BTreeSet<_> = ["s4", "s6"].iter().map(|n| m.state_index(n).unwrap()).collect();
        let o = reachability_to_reward(&m, &goal);
        for (s, a) in m.pairs() {
            for (t, _) in m.succ(s, a) {
                let expect = if goal.contains(t) { qi(1) } else { qi(0) };
                assert_eq!(o.reward.get(s, a, *t), expect);
            }
        }
        let empty = reachability_to_reward(&m, &BTreeSet::new());
        assert!(empty.reward.is_zero() && empty.is_total());
    }

    fn max_max() -> Query {
        let o = Objective::new(RewardStructure::new(), Relation::AtLeast, BTreeSet::new());
        Query::new(alloc::vec![o.clone(), o]).unwrap()
    }

    #[test]
    fn domination_examples() {
        let qy = max_max();
        let p = Point::finite([q(7, 10), q(7, 10)]);
        assert!(dominates(&qy, &p, &p).unwrap());
        assert!(dominates(&qy, &p, &Point::finite([q(1, 2), q(1, 2)])).unwrap());
        assert!(!dominates(&qy, &p, &Point::finite([q(8, 10), q(1, 10)])).unwrap());
        let mut mixed = qy.clone();
        mixed.objectives[1].relation = Relation::AtMost;
        assert!(dominates(&mixed, &Point::finite([qi(1), qi(0)]), &Point::finite([q(1, 2), qi(2)])).unwrap());
        assert!(dominates(&qy, &p, &Point::finite([qi(1)])).is_err());
    }
}
