//! Qualitative analysis: SCCs, maximal end components, zero and maybe states,
//! infinite-reward states, end-component elimination and the numeric bounds
//! used as big-M constants by the encodings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::linalg;
use crate::mdp::{sub_mdp, Choice, Mdp, MdpError, Objective, Query, SubMdp};
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("every strategy yields infinite reward for a minimizing objective from the initial state")]
    InitialInfinite,
    #[error("an end component with positive reward is reachable")]
    UnboundedReward,
    #[error("sink set is empty")]
    EmptySink,
    #[error("policy evaluation hit a singular system")]
    Singular,
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Strongly connected components of a graph given by adjacency lists.
///
/// Components come out in reverse topological order; states inside a component are sorted.
pub fn sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0usize;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = work.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(u, _)) = work.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Maximal end components, each a set of (state, action) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MecDecomposition {
    pub mecs: Vec<BTreeSet<(usize, usize)>>,
}

impl MecDecomposition {
    pub fn len(&self) -> usize {
        self.mecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mecs.is_empty()
    }

    pub fn states(&self, i: usize) -> BTreeSet<usize> {
        self.mecs[i].iter().map(|p| p.0).collect()
    }

    /// MEC index of each state, if any.
    pub fn state_map(&self, n: usize) -> Vec<Option<usize>> {
        let mut map = vec![None; n];
        for (i, e) in self.mecs.iter().enumerate() {
            for &(s, _) in e {
                map[s] = Some(i);
            }
        }
        map
    }

    pub fn contains_pair(&self, s: usize, a: usize) -> bool {
        self.mecs.iter().any(|e| e.contains(&(s, a)))
    }
}

/// Largest subset of `pairs` that is closed for `m`.
pub fn largest_closed_subset(m: &Mdp, pairs: &BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    let mut cur = pairs.clone();
    loop {
        let states: BTreeSet<usize> = cur.iter().map(|p| p.0).collect();
        let before = cur.len();
        cur.retain(|&(s, a)| m.succ(s, a).iter().all(|(t, _)| states.contains(t)));
        if cur.len() == before {
            return cur;
        }
    }
}

/// MECs of `m`.
pub fn compute_mecs(m: &Mdp) -> MecDecomposition {
    mecs_within(m, &m.pairs().collect())
}

/// MECs of the sub-MDP induced by the largest closed subset of `candidates`.
pub fn mecs_within(m: &Mdp, candidates: &BTreeSet<(usize, usize)>) -> MecDecomposition {
    let n = m.num_states();
    let mut pairs = candidates.clone();
    let comp = loop {
        pairs = largest_closed_subset(m, &pairs);
        let mut adj = vec![Vec::new(); n];
        for &(s, a) in &pairs {
            for (t, _) in m.succ(s, a) {
                adj[s].push(*t);
            }
        }
        let mut comp = vec![usize::MAX; n];
        for (i, c) in sccs(&adj).into_iter().enumerate() {
            for s in c {
                comp[s] = i;
            }
        }
        let before = pairs.len();
        pairs.retain(|&(s, a)| m.succ(s, a).iter().all(|(t, _)| comp[*t] == comp[s]));
        if pairs.len() == before {
            break comp;
        }
    };
    let mut groups: BTreeMap<usize, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for &(s, a) in &pairs {
        groups.entry(comp[s]).or_default().insert((s, a));
    }
    let mut mecs: Vec<_> = groups.into_values().collect();
    mecs.sort_by_key(|e| e.iter().next().map(|p| p.0));
    MecDecomposition { mecs }
}

/// S0^j and S?^j of one objective.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectiveStateSets {
    pub zero: BTreeSet<usize>,
    pub maybe: BTreeSet<usize>,
}

impl ObjectiveStateSets {
    pub fn zero_mask(&self, n: usize) -> Vec<bool> {
        let mut v = vec![false; n];
        for &s in &self.zero {
            v[s] = true;
        }
        v
    }

    pub fn maybe_mask(&self, n: usize) -> Vec<bool> {
        let mut v = vec![false; n];
        for &s in &self.maybe {
            v[s] = true;
        }
        v
    }
}

/// States that can collect positive reward before reaching the goal.
fn positive_states(m: &Mdp, obj: &Objective) -> Vec<bool> {
    let n = m.num_states();
    let mut bad = vec![false; n];
    for (s, a) in m.pairs() {
        if !obj.goal.contains(&s) && obj.reward.pair_positive(s, a) {
            bad[s] = true;
        }
    }
    loop {
        let mut changed = false;
        for (s, a) in m.pairs() {
            if !bad[s] && !obj.goal.contains(&s) && m.succ(s, a).iter().any(|(t, _)| bad[*t]) {
                bad[s] = true;
                changed = true;
            }
        }
        if !changed {
            return bad;
        }
    }
}

/// S0^j (no strategy collects reward before G) and S?^j (reachable from s_I avoiding S0^j).
pub fn compute_zero_states(m: &Mdp, obj: &Objective) -> ObjectiveStateSets {
    let bad = positive_states(m, obj);
    let zero: BTreeSet<usize> = (0..m.num_states()).filter(|&s| !bad[s]).collect();
    let mut maybe = BTreeSet::new();
    if !zero.contains(&m.initial()) {
        let mut stack = vec![m.initial()];
        maybe.insert(m.initial());
        while let Some(s) = stack.pop() {
            for a in 0..m.num_actions(s) {
                for (t, _) in m.succ(s, a) {
                    if !zero.contains(t) && maybe.insert(*t) {
                        stack.push(*t);
                    }
                }
            }
        }
    }
    ObjectiveStateSets { zero, maybe }
}

/// States from which some strategy reaches `target` almost surely using `allowed` pairs.
pub fn prob1e(m: &Mdp, target: &[bool], allowed: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let n = m.num_states();
    let mut r = vec![true; n];
    loop {
        let mut u: Vec<bool> = (0..n).map(|s| target[s] && r[s]).collect();
        loop {
            let mut changed = false;
            for s in 0..n {
                if u[s] || !r[s] {
                    continue;
                }
                let ok = (0..m.num_actions(s)).any(|a| {
                    allowed(s, a)
                        && m.succ(s, a).iter().all(|(t, _)| r[*t])
                        && m.succ(s, a).iter().any(|(t, _)| u[*t])
                });
                if ok {
                    u[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if u == r {
            return r;
        }
        r = u;
    }
}

/// S_∞: states where every strategy collects infinite reward on some minimizing
/// objective (value from a fresh start at the state).
///
/// Goal visits are tracked with one bit per minimizing objective with a goal set, so the
/// analysis runs on the goal-tracking product.
pub fn compute_sinfty(m: &Mdp, q: &Query) -> BTreeSet<usize> {
    let mins: Vec<&Objective> = q.objectives.iter().filter(|o| !o.is_max()).collect();
    if mins.is_empty() {
        return BTreeSet::new();
    }
    let n = m.num_states();
    let goal_mask = |s: usize| -> u64 {
        mins.iter().enumerate().filter(|(_, o)| o.goal.contains(&s)).fold(0u64, |acc, (j, _)| acc | (1 << j))
    };
    // Goal-tracking product over (state, done-mask).
    let mut index: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    let mut keys: Vec<(usize, u64)> = Vec::new();
    let mut work: Vec<usize> = Vec::new();
    for s in 0..n {
        let k = (s, goal_mask(s));
        if !index.contains_key(&k) {
            index.insert(k, keys.len());
            keys.push(k);
            work.push(keys.len() - 1);
        }
    }
    let mut succ: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let (s, d) = keys[i];
        let mut acts = Vec::new();
        for a in 0..m.num_actions(s) {
            let mut ts = Vec::new();
            for (t, _) in m.succ(s, a) {
                let k = (*t, d | goal_mask(*t));
                let idx = match index.get(&k) {
                    Some(&x) => x,
                    None => {
                        index.insert(k, keys.len());
                        keys.push(k);
                        keys.len() - 1
                    }
                };
                ts.push(idx);
            }
            acts.push(ts);
        }
        succ.push(acts);
        i += 1;
    }
    let pn = keys.len();
    let choices: Vec<Vec<Choice>> = succ
        .iter()
        .map(|acts| {
            acts.iter()
                .enumerate()
                .map(|(a, ts)| {
                    let w = Q::new(1.into(), (ts.len() as i64).into());
                    Choice { label: format!("{}", a), succ: ts.iter().map(|&t| (t, w.clone())).collect() }
                })
                .collect()
        })
        .collect();
    let names = (0..pn).map(|i| format!("{}", i)).collect();
    let prod = Mdp::new(names, choices, 0).expect("goal-tracking product is well formed");
    let zero_pair = |x: usize, a: usize| -> bool {
        let (s, d) = keys[x];
        mins.iter().enumerate().all(|(j, o)| d & (1 << j) != 0 || !o.reward.pair_positive(s, a))
    };
    let zero_pairs: BTreeSet<(usize, usize)> = prod.pairs().filter(|&(x, a)| zero_pair(x, a)).collect();
    let mut target = vec![false; pn];
    for e in mecs_within(&prod, &zero_pairs).mecs {
        for (x, _) in e {
            target[x] = true;
        }
    }
    let fin = prob1e(&prod, &target, |_, _| true);
    (0..n).filter(|&s| !fin[index[&(s, goal_mask(s))]]).collect()
}

/// M↓(E_fin, s_I) where E_fin is the largest closed subset of (S \ S_∞) × Act.
pub fn restrict_to_finite(m: &Mdp, q: &Query) -> Result<SubMdp, GraphError> {
    let inf = compute_sinfty(m, q);
    if inf.contains(&m.initial()) {
        return Err(GraphError::InitialInfinite);
    }
    let pairs: BTreeSet<(usize, usize)> = m.pairs().filter(|(s, _)| !inf.contains(s)).collect();
    let closed = largest_closed_subset(m, &pairs);
    if !closed.iter().any(|p| p.0 == m.initial()) {
        return Err(GraphError::InitialInfinite);
    }
    Ok(sub_mdp(m, &closed, m.initial())?)
}

/// Where an action of an EC-eliminated model comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOrigin {
    /// Unchanged action with this original index.
    Original(usize),
    /// Fresh action at an EC state mirroring the leaving pair (state, action).
    Fresh { state: usize, action: usize },
    /// Self-loop replacing an EC without leaving pairs.
    Stay,
}

/// Result of end-component elimination, with provenance of every action.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub mdp: Mdp,
    pub origin: Vec<Vec<PairOrigin>>,
    pub mecs: MecDecomposition,
    /// Lower bound p_E per eliminated MEC.
    pub p: Vec<Q>,
    /// States of eliminated MECs that could not be left; they become absorbing.
    pub absorbed: Vec<bool>,
}

fn min_prob(m: &Mdp, s: usize) -> Q {
    (0..m.num_actions(s))
        .flat_map(|a| m.succ(s, a).iter().map(|(_, p)| p.clone()))
        .min()
        .unwrap_or_else(Q::one)
}

/// End-component elimination with provenance; ECs within `keep` stay untouched.
pub fn eliminate_ecs_detailed(m: &Mdp, keep: &[bool]) -> Elimination {
    let n = m.num_states();
    let candidates: BTreeSet<(usize, usize)> = m.pairs().filter(|&(s, _)| !keep[s]).collect();
    let mecs = mecs_within(m, &candidates);
    let map = mecs.state_map(n);
    let mut p = Vec::with_capacity(mecs.len());
    for i in 0..mecs.len() {
        let mut prod = Q::one();
        for s in mecs.states(i) {
            prod *= min_prob(m, s);
        }
        p.push(prod);
    }
    let mut choices: Vec<Vec<Choice>> = Vec::with_capacity(n);
    let mut origin: Vec<Vec<PairOrigin>> = Vec::with_capacity(n);
    let mut absorbed = vec![false; n];
    for s in 0..n {
        let Some(i) = map[s] else {
            choices.push(m.actions(s).to_vec());
            origin.push((0..m.num_actions(s)).map(PairOrigin::Original).collect());
            continue;
        };
        let e = &mecs.mecs[i];
        let mut cs = Vec::new();
        let mut os = Vec::new();
        for a in 0..m.num_actions(s) {
            if !e.contains(&(s, a)) {
                cs.push(m.actions(s)[a].clone());
                os.push(PairOrigin::Original(a));
            }
        }
        let pe = &p[i];
        for s2 in mecs.states(i) {
            for a2 in 0..m.num_actions(s2) {
                if e.contains(&(s2, a2)) {
                    continue;
                }
                let mut dist: BTreeMap<usize, Q> = BTreeMap::new();
                for (t, pr) in m.succ(s2, a2) {
                    *dist.entry(*t).or_insert_with(Q::zero) += pe * pr;
                }
                if !pe.is_one() {
                    *dist.entry(s).or_insert_with(Q::zero) += Q::one() - pe;
                }
                let c = &m.actions(s2)[a2];
                cs.push(Choice { label: format!("~{}@{}", c.label, m.name(s2)), succ: dist.into_iter().collect() });
                os.push(PairOrigin::Fresh { state: s2, action: a2 });
            }
        }
        if cs.is_empty() {
            cs.push(Choice { label: String::from("~stay"), succ: vec![(s, Q::one())] });
            os.push(PairOrigin::Stay);
            absorbed[s] = true;
        }
        choices.push(cs);
        origin.push(os);
    }
    let mdp = Mdp::new(m.names().to_vec(), choices, m.initial()).expect("elimination keeps distributions");
    Elimination { mdp, origin, mecs, p, absorbed }
}

/// End-component elimination outside `keep`.
pub fn eliminate_ecs(m: &Mdp, keep: &BTreeSet<usize>) -> Mdp {
    let mut mask = vec![false; m.num_states()];
    for &s in keep {
        mask[s] = true;
    }
    eliminate_ecs_detailed(m, &mask).mdp
}

/// Maximal expected total reward until `sink` by exact policy iteration.
///
/// Requires that no end component exists outside `sink`; `reward[s][a]` is the expected
/// immediate reward of (s, a).
pub fn max_total_reward(m: &Mdp, sink: &[bool], reward: &[Vec<Q>]) -> Result<Vec<Q>, GraphError> {
    let n = m.num_states();
    let free: Vec<usize> = (0..n).filter(|&s| !sink[s]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in free.iter().enumerate() {
        pos[s] = i;
    }
    let mut sigma = vec![0usize; n];
    // Start from the locally greedy choice to save iterations.
    for &s in &free {
        let best = (0..m.num_actions(s)).max_by(|&a, &b| reward[s][a].cmp(&reward[s][b]).then(b.cmp(&a)));
        sigma[s] = best.unwrap_or(0);
    }
    loop {
        let k = free.len();
        let mut a = vec![vec![Q::zero(); k]; k];
        let mut b = vec![Q::zero(); k];
        for (i, &s) in free.iter().enumerate() {
            a[i][i] += Q::one();
            for (t, p) in m.succ(s, sigma[s]) {
                if !sink[*t] {
                    a[i][pos[*t]] -= p;
                }
            }
            b[i] = reward[s][sigma[s]].clone();
        }
        let x = linalg::solve(&a, &b).ok_or(GraphError::Singular)?;
        let mut v = vec![Q::zero(); n];
        for (i, &s) in free.iter().enumerate() {
            v[s] = x[i].clone();
        }
        let mut changed = false;
        for &s in &free {
            let value = |act: usize| -> Q {
                let mut r = reward[s][act].clone();
                for (t, p) in m.succ(s, act) {
                    r += p * &v[*t];
                }
                r
            };
            let mut best = value(sigma[s]);
            for act in 0..m.num_actions(s) {
                let va = value(act);
                if va > best {
                    best = va;
                    sigma[s] = act;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(v);
        }
    }
}

/// Upper bounds u_s for E(R ◊ G) from every state (0 on S0).
///
/// Fails with `UnboundedReward` if an end component outside S0 collects positive reward.
pub fn compute_reward_upper_bounds(m: &Mdp, obj: &Objective) -> Result<Vec<Q>, GraphError> {
    reward_bounds(m, obj, false)
}

/// Like [`compute_reward_upper_bounds`] but only bounds strategies with finite value, so
/// end components with positive reward are allowed.
pub fn compute_reward_upper_bounds_finite(m: &Mdp, obj: &Objective) -> Result<Vec<Q>, GraphError> {
    reward_bounds(m, obj, true)
}

fn reward_bounds(m: &Mdp, obj: &Objective, allow_positive: bool) -> Result<Vec<Q>, GraphError> {
    let n = m.num_states();
    let sets = compute_zero_states(m, obj);
    let keep = sets.zero_mask(n);
    let el = eliminate_ecs_detailed(m, &keep);
    let mut sojourn = vec![Q::zero(); el.mecs.len()];
    for (i, e) in el.mecs.mecs.iter().enumerate() {
        let mut per_state: BTreeMap<usize, Q> = BTreeMap::new();
        for &(s, a) in e {
            let r = obj.reward.expected(m, s, a);
            let slot = per_state.entry(s).or_insert_with(Q::zero);
            if r > *slot {
                *slot = r;
            }
        }
        let total: Q = per_state.into_values().sum();
        if !total.is_zero() && !allow_positive {
            return Err(GraphError::UnboundedReward);
        }
        sojourn[i] = total / &el.p[i];
    }
    let map = el.mecs.state_map(n);
    let mut reward = Vec::with_capacity(n);
    for s in 0..n {
        let rs = el.origin[s]
            .iter()
            .map(|o| match o {
                PairOrigin::Original(a) => obj.reward.expected(m, s, *a),
                PairOrigin::Fresh { state, action } => {
                    let i = map[s].expect("fresh action at an EC state");
                    &el.p[i] * (obj.reward.expected(m, *state, *action) + &sojourn[i])
                }
                PairOrigin::Stay => Q::zero(),
            })
            .collect::<Vec<_>>();
        reward.push(rs);
    }
    // Absorbed components are sinks worth one sojourn; charge it on entry.
    let terminal = |t: usize| if el.absorbed[t] { map[t].map(|i| sojourn[i].clone()) } else { None };
    for s in 0..n {
        if keep[s] || el.absorbed[s] {
            continue;
        }
        for (a, r) in reward[s].iter_mut().enumerate() {
            for (t, pr) in el.mdp.succ(s, a) {
                if let Some(k) = terminal(*t) {
                    *r += pr * k;
                }
            }
        }
    }
    let sink: Vec<bool> = (0..n).map(|s| keep[s] || el.absorbed[s]).collect();
    let mut v = max_total_reward(&el.mdp, &sink, &reward)?;
    for (s, x) in v.iter_mut().enumerate() {
        if let Some(k) = terminal(s) {
            *x = k;
        }
    }
    Ok(v)
}

/// Upper bounds F_s on the expected number of visits of s before reaching `sink`,
/// valid for every strategy that eventually stays in `sink` or in an end component.
///
/// Outside end components F_s is the maximal expected visit count after elimination.
/// For a state of an eliminated MEC E it is the maximal expected number of entries
/// into E times 1/p_E, the bound on visits per stay inside E.
pub fn compute_visit_upper_bounds(m: &Mdp, sink: &BTreeSet<usize>) -> Result<Vec<Q>, GraphError> {
    if sink.is_empty() {
        return Err(GraphError::EmptySink);
    }
    let n = m.num_states();
    let mut keep = vec![false; n];
    for &s in sink {
        keep[s] = true;
    }
    let el = eliminate_ecs_detailed(m, &keep);
    let stop: Vec<bool> = (0..n).map(|s| keep[s] || el.absorbed[s]).collect();
    let map = el.mecs.state_map(n);
    let init = m.initial();
    let mut f = vec![Q::one(); n];
    for t in 0..n {
        if stop[t] || map[t].is_some() {
            continue;
        }
        let reward: Vec<Vec<Q>> = (0..n)
            .map(|s| vec![if s == t { Q::one() } else { Q::zero() }; el.mdp.num_actions(s)])
            .collect();
        let v = max_total_reward(&el.mdp, &stop, &reward)?;
        if v[init] > Q::one() {
            f[t] = v[init].clone();
        }
    }
    for i in 0..el.mecs.len() {
        let states = el.mecs.states(i);
        let reward: Vec<Vec<Q>> = (0..n)
            .map(|s| {
                (0..el.mdp.num_actions(s))
                    .map(|a| {
                        if states.contains(&s) {
                            return Q::zero();
                        }
                        el.mdp.succ(s, a).iter().filter(|(t, _)| states.contains(t)).map(|(_, p)| p.clone()).sum()
                    })
                    .collect()
            })
            .collect();
        let v = max_total_reward(&el.mdp, &stop, &reward)?;
        let mut entries = v[init].clone();
        if states.contains(&init) {
            entries += Q::one();
        }
        if entries < Q::one() {
            entries = Q::one();
        }
        let bound = entries / &el.p[i];
        for s in states {
            f[s] = bound.clone();
        }
    }
    Ok(f)
}

/// Per-objective reward bounds and visit bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bounds {
    /// u_s^j indexed `[j][s]`.
    pub reward_upper: Vec<Vec<Q>>,
    /// F_s indexed by state.
    pub visit_upper: Vec<Q>,
}
